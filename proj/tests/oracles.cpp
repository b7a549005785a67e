#include "oracles.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace oracle {

int winding_number(const offnadir::Polygon& p, double x, double y) {
    double total = 0.0;
    const std::size_t m = p.vertices.size();
    for (std::size_t i = 0; i < m; ++i) {
        const offnadir::Point2& a = p.vertices[i];
        const offnadir::Point2& b = p.vertices[(i + 1) % m];
        const double ax = a.x - x, ay = a.y - y;
        const double bx = b.x - x, by = b.y - y;
        total += std::atan2(ax * by - ay * bx, ax * bx + ay * by);
    }
    return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

offnadir::BitMask rasterize_naive(const offnadir::Polygon& p, int width, int height) {
    offnadir::BitMask m(width, height);
    if (p.vertices.size() < 3) return m;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (winding_number(p, x + 0.5, y + 0.5) != 0) m.set(x, y, true);
    return m;
}

double iou_naive(const offnadir::BitMask& a, const offnadir::BitMask& b) {
    long inter = 0, uni = 0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            const bool pa = a.at(x, y), pb = b.at(x, y);
            inter += pa && pb;
            uni += pa || pb;
        }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

std::vector<double> squared_edt_naive(const offnadir::BitMask& m) {
    const int w = m.width, h = m.height;
    std::vector<double> out(static_cast<std::size_t>(w) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!m.at(x, y)) {
                out[static_cast<std::size_t>(y) * w + x] = 0.0;
                continue;
            }
            // Nearest out-of-image background on each side, then every
            // in-image background pixel.
            double best = std::numeric_limits<double>::infinity();
            const double border[] = {double(x + 1), double(w - x), double(y + 1),
                                     double(h - y)};
            for (double b : border) best = std::min(best, b * b);
            for (int by = 0; by < h; ++by)
                for (int bx = 0; bx < w; ++bx)
                    if (!m.at(bx, by)) {
                        const double dx = x - bx, dy = y - by;
                        best = std::min(best, dx * dx + dy * dy);
                    }
            out[static_cast<std::size_t>(y) * w + x] = best;
        }
    return out;
}

offnadir::BitMask boundary_band_naive(const offnadir::BitMask& m, double d) {
    const std::vector<double> sq = squared_edt_naive(m);
    const double limit = (d + 1.0) * (d + 1.0) + 1e-9;
    offnadir::BitMask out(m.width, m.height);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y) && sq[static_cast<std::size_t>(y) * m.width + x] <= limit)
                out.set(x, y, true);
    return out;
}

std::vector<std::array<int, 2>> match_naive(const std::vector<double>& scores,
                                            const std::vector<double>& iou, int n_pred,
                                            int n_gt, double threshold) {
    std::vector<int> order(n_pred);
    for (int i = 0; i < n_pred; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    std::vector<bool> claimed(n_gt, false);
    std::vector<std::array<int, 2>> pairs;
    for (int p : order) {
        int best_g = -1;
        double best_iou = -1.0;
        for (int g = 0; g < n_gt; ++g)  // best *unclaimed* gt, lowest index on ties
            if (!claimed[g] && iou[static_cast<std::size_t>(p) * n_gt + g] > best_iou) {
                best_iou = iou[static_cast<std::size_t>(p) * n_gt + g];
                best_g = g;
            }
        if (best_g >= 0 && best_iou >= threshold) {
            claimed[best_g] = true;
            pairs.push_back({p, best_g});
        }
    }
    return pairs;
}

double ap101_naive(std::vector<std::tuple<double, long, bool>> entries, long n_gt) {
    if (n_gt == 0) return entries.empty() ? 1.0 : 0.0;
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
        return std::get<1>(a) < std::get<1>(b);
    });
    std::vector<double> prec, rec;
    long tp = 0, fp = 0;
    for (const auto& e : entries) {
        (std::get<2>(e) ? tp : fp) += 1;
        prec.push_back(static_cast<double>(tp) / (tp + fp));
        rec.push_back(static_cast<double>(tp) / n_gt);
    }
    double total = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double r = i / 100.0;
        double best = 0.0;
        for (std::size_t k = 0; k < prec.size(); ++k)
            if (rec[k] >= r) best = std::max(best, prec[k]);
        total += best;
    }
    return total / 101.0;
}

}  // namespace oracle

namespace testutil {

std::string scratch_dir() {
    static const std::string dir = [] {
        namespace fs = std::filesystem;
        fs::path p = fs::temp_directory_path() /
                     ("offnadir_tests_" + std::to_string(::getpid()));
        fs::create_directories(p);
        return p.string();
    }();
    return dir;
}

std::string scratch_path(const std::string& name) { return scratch_dir() + "/" + name; }

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << content;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args, std::string* output) {
    const std::string log = scratch_path("cli_output.txt");
    const std::string cmd = std::string(OFFNADIR_CLI_PATH) + " " + args + " > " + log + " 2>&1";
    const int raw = std::system(cmd.c_str());
    if (output) *output = slurp(log);
    if (raw == -1) return -1;
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace testutil
