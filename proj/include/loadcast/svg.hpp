#pragma once

#include <string>
#include <vector>

namespace loadcast::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool points = false;  // scatter instead of polyline
    bool dashed = false;
};

struct LinePlot {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    std::vector<Series> series;
    bool embed_data = true;  // data table as an XML comment in the file
};

// Standalone SVG line/scatter plot with axes and a legend. No external
// toolchain; results render in any browser.
void write_line_plot(const std::string& path, const LinePlot& plot);

}  // namespace loadcast::svg
