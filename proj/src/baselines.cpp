#include "loadcast/baselines.hpp"

#include <fstream>

#include <Eigen/SVD>

#include "loadcast/csv.hpp"
#include "loadcast/errors.hpp"

namespace loadcast::baselines {

ArxModel arx_fit(const std::vector<series::SamplePair>& train, int lags) {
    if (lags < 1) throw ParamError("lag order must be >= 1");
    if (train.empty()) throw ParamError("empty training set");
    const int S = static_cast<int>(train.front().predictors.rows());
    const int load_col = series::kFeatureCols - 1;

    // Training samples cover consecutive days, so their predictor columns
    // concatenate into the flat 15-minute training series.
    const Eigen::Index n = static_cast<Eigen::Index>(train.size()) * S;
    Vec load(n);
    Mat exog(n, series::kGroups);
    for (std::size_t i = 0; i < train.size(); ++i) {
        load.segment(static_cast<Eigen::Index>(i) * S, S) = train[i].predictors.col(load_col);
        exog.block(static_cast<Eigen::Index>(i) * S, 0, S, series::kGroups) =
            train[i].predictors.leftCols(series::kGroups);
    }

    const Eigen::Index rows = n - lags;
    const Eigen::Index cols = 1 + lags + series::kGroups;
    if (rows <= cols) throw ParamError("not enough observations for the requested lag order");
    Mat X(rows, cols);
    Vec y(rows);
    for (Eigen::Index g = lags; g < n; ++g) {
        const Eigen::Index r = g - lags;
        y[r] = load[g];
        X(r, 0) = 1.0;
        for (int l = 1; l <= lags; ++l) X(r, l) = load[g - l];
        X.row(r).tail(series::kGroups) = exog.row(g);
    }

    Eigen::BDCSVD<Mat> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw RankError("SVD failed on the ARX design");
    if (svd.rank() == 0) throw RankError("ARX design has rank zero");
    const Vec beta = svd.solve(y);

    ArxModel model;
    model.lags = lags;
    model.intercept = beta[0];
    model.ar_coef = beta.segment(1, lags);
    model.exog_coef = beta.tail(series::kGroups);
    model.collinear = svd.rank() < cols;
    return model;
}

Vec arx_forecast(const ArxModel& model, const series::SamplePair& sample) {
    const int S = static_cast<int>(sample.predictors.rows());
    if (model.lags > S) {
        throw ParamError("lag order exceeds the available day history (" + std::to_string(S) + ")");
    }
    const int load_col = series::kFeatureCols - 1;

    std::vector<double> hist(sample.predictors.col(load_col).data(),
                             sample.predictors.col(load_col).data() + S);
    Vec out(2 * S);
    for (int p = 0; p < 2 * S; ++p) {
        const int s = p % S;  // future schedules stand in from day t
        double v = model.intercept;
        const std::size_t end = hist.size();
        for (int l = 1; l <= model.lags; ++l) v += model.ar_coef[l - 1] * hist[end - l];
        for (int c = 0; c < series::kGroups; ++c) v += model.exog_coef[c] * sample.predictors(s, c);
        out[p] = v;
        hist.push_back(v);
    }
    return out;
}

Vec naive_forecast(const series::SamplePair& sample) {
    const int S = static_cast<int>(sample.predictors.rows());
    Vec out(2 * S);
    out.head(S) = sample.predictors.col(series::kFeatureCols - 1);
    out.tail(S) = out.head(S);
    return out;
}

void save_model(const std::string& path, const ArxModel& model) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model file: " + path);
    out << "loadcast-arx 1\n";
    out << "lags " << model.lags << '\n';
    out << "intercept " << csv::format_double(model.intercept) << '\n';
    out << "collinear " << (model.collinear ? 1 : 0) << '\n';
    out << "ar";
    for (Eigen::Index i = 0; i < model.ar_coef.size(); ++i) {
        out << ' ' << csv::format_double(model.ar_coef[i]);
    }
    out << "\nexog";
    for (Eigen::Index i = 0; i < model.exog_coef.size(); ++i) {
        out << ' ' << csv::format_double(model.exog_coef[i]);
    }
    out << '\n';
}

ArxModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model file: " + path);
    std::string magic, key;
    int version;
    in >> magic >> version;
    if (magic != "loadcast-arx" || version != 1) throw ParamError("not a loadcast-arx v1 file");
    ArxModel model;
    int flag;
    in >> key >> model.lags >> key >> model.intercept >> key >> flag;
    model.collinear = flag != 0;
    in >> key;
    model.ar_coef.resize(model.lags);
    for (int i = 0; i < model.lags; ++i) in >> model.ar_coef[i];
    in >> key;
    model.exog_coef.resize(series::kGroups);
    for (int i = 0; i < series::kGroups; ++i) in >> model.exog_coef[i];
    if (!in) throw ParamError("truncated loadcast-arx file");
    return model;
}

}  // namespace loadcast::baselines
