#ifndef RADSPLICE_SVG_HPP
#define RADSPLICE_SVG_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "radsplice/image.hpp"
#include "radsplice/image_io.hpp"
#include "radsplice/pipeline.hpp"

namespace radsplice {

namespace detail {

inline std::string base64(const std::vector<std::uint8_t>& in) {
    static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < in.size(); i += 3) {
        const std::uint32_t b = (std::uint32_t(in[i]) << 16) | (i + 1 < in.size() ? std::uint32_t(in[i + 1]) << 8 : 0u) |
                                (i + 2 < in.size() ? std::uint32_t(in[i + 2]) : 0u);
        out += tbl[(b >> 18) & 63];
        out += tbl[(b >> 12) & 63];
        out += i + 1 < in.size() ? tbl[(b >> 6) & 63] : '=';
        out += i + 2 < in.size() ? tbl[b & 63] : '=';
    }
    return out;
}

/// Fixed-precision number formatting so the bytes do not depend on locale.
inline std::string num(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    std::string s = buf;
    if (s == "-0.00" || s == "-0.0" || s == "-0") s.erase(0, 1);
    return s;
}

inline const char* flag_color(const LineVerdict& l) {
    if (l.has(kSignFlip)) return "#e41a1c";
    if (l.has(kMonotonicityBreak) || l.has(kSymmetryBreak)) return "#ff7f00";
    if (!l.usable) return "#999999";
    return "#1f9e4a";
}

}  // namespace detail

/// The input image with every linked segment drawn on top: estimated
/// lines green, flagged lines red (sign) or orange (rule a), rejected
/// segments dashed grey.
inline std::string overlay_svg(const GrayImage& img, const PipelineResult& res) {
    const int w = img.width(), h = img.height();
    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" width=\"" +
         std::to_string(w) + "\" height=\"" + std::to_string(h) + "\" viewBox=\"-0.5 -0.5 " + std::to_string(w) +
         " " + std::to_string(h) + "\">\n";
    s += "<image x=\"-0.5\" y=\"-0.5\" width=\"" + std::to_string(w) + "\" height=\"" + std::to_string(h) +
         "\" xlink:href=\"data:image/png;base64," + detail::base64(encode_png(img)) + "\"/>\n";
    auto polyline = [&](const std::vector<PixelPoint>& pts, const char* color, const char* extra) {
        std::string p;
        // every 4th point keeps the file small without visible loss
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (i % 4 == 0 || i + 1 == pts.size()) p += detail::num(pts[i].x) + "," + detail::num(pts[i].y) + " ";
        if (!p.empty()) p.pop_back();
        s += std::string("<polyline fill=\"none\" stroke=\"") + color + "\" stroke-width=\"2\"" + extra +
             " points=\"" + p + "\"/>\n";
    };
    for (const auto& l : res.linked)
        if (!l.check.accepted) polyline(l.segment.points(), "#999999", " stroke-dasharray=\"6 4\"");
    for (const auto& v : res.report.lines) {
        const auto& seg = res.lines[v.source].segment;
        polyline(seg.points(), detail::flag_color(v), "");
        const PixelPoint mid = seg.points()[seg.size() / 2];
        s += "<text x=\"" + detail::num(mid.x + 6) + "\" y=\"" + detail::num(mid.y) +
             "\" font-family=\"monospace\" font-size=\"14\" fill=\"" + detail::flag_color(v) + "\">" +
             std::to_string(v.id) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

/// Scatter of estimated k1 against signed center distance.
inline std::string scatter_svg(const ConsistencyReport& rep) {
    const double W = 640, H = 400, L = 70, R = 20, T = 20, B = 50;
    double dmax = 0.1, kmax = 1e-3;
    for (const auto& l : rep.lines) {
        dmax = std::max(dmax, std::abs(l.distance));
        kmax = std::max(kmax, std::abs(l.k1));
    }
    dmax *= 1.1;
    kmax *= 1.2;
    auto X = [&](double d) { return L + (d + dmax) / (2 * dmax) * (W - L - R); };
    auto Y = [&](double k) { return T + (kmax - k) / (2 * kmax) * (H - T - B); };
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
    s += "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    s += "<g stroke=\"#444\" stroke-width=\"1\">\n";
    s += "<line x1=\"" + detail::num(L) + "\" y1=\"" + detail::num(Y(0)) + "\" x2=\"" + detail::num(W - R) + "\" y2=\"" +
         detail::num(Y(0)) + "\"/>\n";
    s += "<line x1=\"" + detail::num(X(0)) + "\" y1=\"" + detail::num(T) + "\" x2=\"" + detail::num(X(0)) + "\" y2=\"" +
         detail::num(H - B) + "\"/>\n</g>\n";
    s += "<g font-family=\"monospace\" font-size=\"12\" fill=\"#222\">\n";
    for (int i = -2; i <= 2; ++i) {
        const double d = dmax * i / 2.5, k = kmax * i / 2.5;
        s += "<text x=\"" + detail::num(X(d)) + "\" y=\"" + detail::num(H - B + 16) + "\" text-anchor=\"middle\">" +
             detail::num(d, 3) + "</text>\n";
        s += "<text x=\"" + detail::num(L - 6) + "\" y=\"" + detail::num(Y(k) + 4) + "\" text-anchor=\"end\">" +
             detail::num(k, 4) + "</text>\n";
    }
    s += "<text x=\"" + detail::num((L + W - R) / 2) + "\" y=\"" + detail::num(H - 10) +
         "\" text-anchor=\"middle\">signed distance from center</text>\n";
    s += "<text x=\"14\" y=\"" + detail::num((T + H - B) / 2) + "\" transform=\"rotate(-90 14 " +
         detail::num((T + H - B) / 2) + ")\" text-anchor=\"middle\">k1</text>\n</g>\n";
    for (const auto& l : rep.lines)
        s += "<circle cx=\"" + detail::num(X(l.distance)) + "\" cy=\"" + detail::num(Y(l.k1)) + "\" r=\"5\" fill=\"" +
             detail::flag_color(l) + "\"><title>line " + std::to_string(l.id) + "</title></circle>\n";
    s += "</svg>\n";
    return s;
}

}  // namespace radsplice

#endif
