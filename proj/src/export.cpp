#include "ppkit/export.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ppkit/csv.hpp"

namespace ppkit {

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// White at 0, saturated red at 1.
std::string color(double frac) {
    frac = std::clamp(frac, 0.0, 1.0);
    const int gb = static_cast<int>(255.0 * (1.0 - frac) + 0.5);
    char buf[16];
    std::snprintf(buf, sizeof buf, "#ff%02x%02x", gb, gb);
    return buf;
}

}  // namespace

std::string matrix_csv(std::span<const std::string> names, std::span<const double> matrix) {
    const std::size_t C = names.size();
    if (matrix.size() != C * C) throw std::invalid_argument("matrix size does not match the type names");
    std::ostringstream out;
    std::vector<std::string> row{"type"};
    row.insert(row.end(), names.begin(), names.end());
    csv::write_row(out, row);
    for (std::size_t c = 0; c < C; ++c) {
        row.assign(1, names[c]);
        for (std::size_t s = 0; s < C; ++s) row.push_back(csv::format_double(matrix[c * C + s]));
        csv::write_row(out, row);
    }
    return out.str();
}

std::string heatmap_svg(std::span<const std::string> names, std::span<const double> matrix,
                        const std::string& title) {
    const std::size_t C = names.size();
    if (matrix.size() != C * C) throw std::invalid_argument("matrix size does not match the type names");
    const double lo = matrix.empty() ? 0.0 : *std::min_element(matrix.begin(), matrix.end());
    const double hi = matrix.empty() ? 0.0 : *std::max_element(matrix.begin(), matrix.end());
    const int cell = 32, left = 120, top = 60;
    const int width = left + static_cast<int>(C) * cell + 40;
    const int height = top + static_cast<int>(C) * cell + 120;
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << xml_escape(title)
        << "</text>\n";
    for (std::size_t c = 0; c < C; ++c) {
        const int y = top + static_cast<int>(c) * cell;
        out << "<text x=\"" << left - 6 << "\" y=\"" << y + cell / 2 + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(names[c])
            << "</text>\n";
        for (std::size_t s = 0; s < C; ++s) {
            const double v = matrix[c * C + s];
            const double frac = hi > lo ? (v - lo) / (hi - lo) : 0.0;
            out << "<rect x=\"" << left + static_cast<int>(s) * cell << "\" y=\"" << y << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"" << color(frac) << "\"><title>" << xml_escape(names[c])
                << " &lt;- " << xml_escape(names[s]) << ": " << short_number(v) << "</title></rect>\n";
        }
    }
    const int label_y = top + static_cast<int>(C) * cell + 14;
    for (std::size_t s = 0; s < C; ++s) {
        const int x = left + static_cast<int>(s) * cell + cell / 2;
        out << "<text x=\"" << x << "\" y=\"" << label_y << "\" transform=\"rotate(45 " << x << " " << label_y
            << ")\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(names[s]) << "</text>\n";
    }
    const int legend_y = height - 30;
    out << "<defs><linearGradient id=\"scale\"><stop offset=\"0\" stop-color=\"" << color(0.0)
        << "\"/><stop offset=\"1\" stop-color=\"" << color(1.0) << "\"/></linearGradient></defs>\n";
    out << "<rect x=\"" << left << "\" y=\"" << legend_y << "\" width=\"" << 120
        << "\" height=\"10\" fill=\"url(#scale)\" stroke=\"#999\"/>\n";
    out << "<text x=\"" << left << "\" y=\"" << legend_y + 24
        << "\" font-family=\"sans-serif\" font-size=\"10\">min " << short_number(lo) << "</text>\n";
    out << "<text x=\"" << left + 120 << "\" y=\"" << legend_y + 24
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">max " << short_number(hi)
        << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

std::string vector_csv(std::span<const std::string> names, std::span<const double> values,
                       const std::string& value_header) {
    if (names.size() != values.size()) throw std::invalid_argument("value count does not match the type names");
    std::ostringstream out;
    csv::write_row(out, std::vector<std::string>{"type", value_header});
    for (std::size_t c = 0; c < names.size(); ++c) {
        csv::write_row(out, std::vector<std::string>{names[c], csv::format_double(values[c])});
    }
    return out.str();
}

std::string bar_chart_svg(std::span<const std::string> names, std::span<const double> values,
                          const std::string& title) {
    if (names.size() != values.size()) throw std::invalid_argument("value count does not match the type names");
    const int bar = 28, gap = 8, left = 60, top = 40, plot_h = 200;
    const int width = left + static_cast<int>(names.size()) * (bar + gap) + 40;
    const int height = top + plot_h + 100;
    double hi = 0.0, lo = 0.0;
    for (double v : values) {
        hi = std::max(hi, v);
        lo = std::min(lo, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    const double zero_y = top + plot_h * hi / span;
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<text x=\"" << left << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << xml_escape(title)
        << "</text>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << zero_y << "\" x2=\"" << width - 20 << "\" y2=\"" << zero_y
        << "\" stroke=\"#333\"/>\n";
    for (std::size_t c = 0; c < names.size(); ++c) {
        const double v = values[c];
        const double h = plot_h * std::abs(v) / span;
        const int x = left + static_cast<int>(c) * (bar + gap);
        const double y = v >= 0.0 ? zero_y - h : zero_y;
        out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bar << "\" height=\"" << h
            << "\" fill=\"#4a78b5\"><title>" << xml_escape(names[c]) << ": " << short_number(v)
            << "</title></rect>\n";
        const int label_y = top + plot_h + 14;
        out << "<text x=\"" << x + bar / 2 << "\" y=\"" << label_y << "\" transform=\"rotate(45 " << x + bar / 2
            << " " << label_y << ")\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(names[c])
            << "</text>\n";
    }
    out << "<text x=\"" << left - 6 << "\" y=\"" << top + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << short_number(hi) << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

std::vector<double> exogenous_rates(const HawkesModel& model) {
    std::vector<double> out(model.num_types());
    const std::vector<double> zeros(model.exogenous.seq_feature_dim(), 0.0);
    SequenceContext ctx;
    ctx.seq_feature = zeros;
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = model.exogenous.value(c, ctx);
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace ppkit
