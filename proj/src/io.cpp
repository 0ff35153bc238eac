#include "vck/io.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vck {

std::string format_g17(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

void ensure_dir(const std::string& dir) {
    std::filesystem::create_directories(dir);
}

namespace {
std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("io: cannot write '" + path + "'");
    return f;
}
} // namespace

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream f = open_out(path);
    f << header << '\n';
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i)
            f << (i ? "," : "") << format_g17(row[i]);
        f << '\n';
    }
}

void write_plotdata(const std::string& path, const std::vector<double>& x,
                    const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("write_plotdata: length mismatch");
    std::ofstream f = open_out(path);
    for (size_t i = 0; i < x.size(); ++i)
        f << format_g17(x[i]) << ' ' << format_g17(y[i]) << '\n';
}

void write_field_csv(const std::string& path, const Grid& g, const DensityField& f) {
    std::ofstream out = open_out(path);
    out << "v,y,F\n";
    for (int j = 0; j < g.n_y; ++j)
        for (int i = 0; i < g.n_v; ++i)
            out << format_g17(g.vc[i]) << ',' << format_g17(g.yc[j]) << ','
                << format_g17(f.values[g.idx(i, j)]) << '\n';
}

DensityField read_field_csv(const std::string& path, const Grid& g) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("io: cannot read '" + path + "'");
    std::string line;
    std::getline(in, line); // header
    DensityField f = zero_field(g);
    int row = 0;
    while (std::getline(in, line) && row < g.size()) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw std::runtime_error("io: malformed field row in '" + path + "'");
        f.values[row++] = std::stod(line.substr(c2 + 1));
    }
    if (row != g.size()) throw std::runtime_error("io: field size mismatch in '" + path + "'");
    return f;
}

uint64_t fnv1a64(const std::string& data) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

void write_manifest(const std::string& dir, const std::string& config_text, uint64_t seed,
                    const std::vector<std::string>& files) {
    std::ofstream f = open_out(dir + "/manifest.txt");
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    f << "vck_version = 0.1.0\n";
    f << "config_fnv1a64 = " << fnv1a64(config_text) << '\n';
    f << "seed = " << seed << '\n';
    f << "timestamp = " << buf << '\n';
    for (const auto& name : files) f << "file = " << name << '\n';
}

} // namespace vck
