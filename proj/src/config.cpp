#include "vck/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vck {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& v, const std::string& key, int line) {
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw std::runtime_error("config line " + std::to_string(line) + ": key '" + key +
                                 "' expects a number, got '" + v + "'");
    }
}

int to_int(const std::string& v, const std::string& key, int line) {
    const double x = to_double(v, key, line);
    const int i = static_cast<int>(x);
    if (static_cast<double>(i) != x)
        throw std::runtime_error("config line " + std::to_string(line) + ": key '" + key +
                                 "' expects an integer");
    return i;
}

bool to_bool(const std::string& v, const std::string& key, int line) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::runtime_error("config line " + std::to_string(line) + ": key '" + key +
                             "' expects true/false");
}

std::vector<double> to_list(const std::string& v, const std::string& key, int line) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(to_double(tok, key, line));
    }
    if (out.empty())
        throw std::runtime_error("config line " + std::to_string(line) + ": key '" + key +
                                 "' expects a comma-separated list");
    return out;
}

std::string g17(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

void validate(RunConfig& cfg) {
    auto fail = [](const std::string& key, const std::string& what) {
        throw std::runtime_error("config key '" + key + "': " + what);
    };
    ModelParams p = cfg.model_params();
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("config: ") + e.what());
    }
    if (cfg.n_v < 4) fail("n_v", "requires n_v >= 4");
    if (cfg.n_y < 4) fail("n_y", "requires n_y >= 4");
    if (!(cfg.y_max > 2.0 * p.y_F())) fail("y_max", "requires y_max > 2*y_F");
    if (!(cfg.dt >= 0.0)) fail("dt", "requires dt >= 0 (0 selects the CFL default)");
    if (!(cfg.t_end > 0.0)) fail("t_end", "requires t_end > 0");
    if (cfg.scheme != "imex" && cfg.scheme != "explicit")
        fail("scheme", "must be 'imex' or 'explicit'");
    if (!(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0)) fail("cfl_safety", "must lie in (0,1]");
    if (cfg.weight_kind != "polynomial" && cfg.weight_kind != "exponential" &&
        cfg.weight_kind != "none")
        fail("weight_kind", "must be 'polynomial', 'exponential' or 'none'");
    if (cfg.weight_kind == "polynomial" && !(cfg.weight_k > 1.0))
        fail("weight_k", "polynomial weight requires k > 1");
    if (cfg.weight_kind == "exponential" && !(cfg.weight_alpha > 0.0))
        fail("weight_alpha", "exponential weight requires alpha > 0");
    if (cfg.twist && cfg.weight_kind == "none")
        fail("twist", "twisted weight needs an admissible base weight");
    if (cfg.n_neurons < 1) fail("n_neurons", "requires n_neurons >= 1");
    if (!(cfg.harris_T > 0.0)) fail("harris_T", "requires harris_T > 0");
    for (double e : cfg.harris_eps_ladder)
        if (!(e > 0.0 && e < 1.0)) fail("harris_eps_ladder", "entries must lie in (0,1)");
    if (cfg.c >= p.weak_connectivity_threshold())
        cfg.warnings.push_back("c = " + g17(cfg.c) +
                               " is at or above the weak-connectivity threshold v_F/v_E = " +
                               g17(p.weak_connectivity_threshold()));
}

} // namespace

ModelParams RunConfig::model_params() const {
    ModelParams p;
    p.v_F = v_F;
    p.v_E = v_E;
    p.y_L = y_L;
    p.a_star = a_star;
    p.y_star = y_star;
    p.c = c;
    return p;
}

WeightSpec RunConfig::weight_spec() const {
    WeightSpec w;
    if (weight_kind == "polynomial") w.kind = WeightKind::polynomial;
    else if (weight_kind == "exponential") w.kind = WeightKind::exponential;
    else w.kind = WeightKind::none;
    w.k = weight_k;
    w.alpha = weight_alpha;
    w.twist = twist;
    return w;
}

Scheme RunConfig::scheme_enum() const {
    return scheme == "explicit" ? Scheme::explicit_euler : Scheme::imex;
}

EvolveConfig RunConfig::evolve_config() const {
    EvolveConfig e;
    e.dt = dt;
    e.t_end = t_end;
    e.scheme = scheme_enum();
    e.cfl_safety = cfl_safety;
    e.diag_weight = weight_spec();
    return e;
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        std::string s = trim(raw);
        if (s.empty() || s[0] == '#') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(origin + " line " + std::to_string(line) +
                                     ": expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        const std::string val = trim(s.substr(eq + 1));
        if (key.empty() || val.empty())
            throw std::runtime_error(origin + " line " + std::to_string(line) +
                                     ": expected 'key = value'");

        if (key == "v_F") cfg.v_F = to_double(val, key, line);
        else if (key == "v_E") cfg.v_E = to_double(val, key, line);
        else if (key == "y_L") cfg.y_L = to_double(val, key, line);
        else if (key == "a_star") cfg.a_star = to_double(val, key, line);
        else if (key == "y_star") cfg.y_star = to_double(val, key, line);
        else if (key == "c") cfg.c = to_double(val, key, line);
        else if (key == "n_v") cfg.n_v = to_int(val, key, line);
        else if (key == "n_y") cfg.n_y = to_int(val, key, line);
        else if (key == "y_max") cfg.y_max = to_double(val, key, line);
        else if (key == "dt") cfg.dt = to_double(val, key, line);
        else if (key == "t_end") cfg.t_end = to_double(val, key, line);
        else if (key == "scheme") cfg.scheme = val;
        else if (key == "cfl_safety") cfg.cfl_safety = to_double(val, key, line);
        else if (key == "weight_kind") cfg.weight_kind = val;
        else if (key == "weight_k") cfg.weight_k = to_double(val, key, line);
        else if (key == "weight_alpha") cfg.weight_alpha = to_double(val, key, line);
        else if (key == "twist") cfg.twist = to_bool(val, key, line);
        else if (key == "seed") cfg.seed = static_cast<uint64_t>(to_double(val, key, line));
        else if (key == "n_neurons") cfg.n_neurons = to_int(val, key, line);
        else if (key == "harris_T") cfg.harris_T = to_double(val, key, line);
        else if (key == "harris_eps_ladder") cfg.harris_eps_ladder = to_list(val, key, line);
        else if (key == "out_dir") cfg.out_dir = val;
        else
            throw std::runtime_error(origin + " line " + std::to_string(line) +
                                     ": unknown key '" + key + "'");
    }
    if (const char* env = std::getenv("VCK_OUT_DIR"); env && *env) cfg.out_dir = env;
    validate(cfg);
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream os;
    os << "v_F = " << g17(cfg.v_F) << '\n'
       << "v_E = " << g17(cfg.v_E) << '\n'
       << "y_L = " << g17(cfg.y_L) << '\n'
       << "a_star = " << g17(cfg.a_star) << '\n'
       << "y_star = " << g17(cfg.y_star) << '\n'
       << "c = " << g17(cfg.c) << '\n'
       << "n_v = " << cfg.n_v << '\n'
       << "n_y = " << cfg.n_y << '\n'
       << "y_max = " << g17(cfg.y_max) << '\n'
       << "dt = " << g17(cfg.dt) << '\n'
       << "t_end = " << g17(cfg.t_end) << '\n'
       << "scheme = " << cfg.scheme << '\n'
       << "cfl_safety = " << g17(cfg.cfl_safety) << '\n'
       << "weight_kind = " << cfg.weight_kind << '\n'
       << "weight_k = " << g17(cfg.weight_k) << '\n'
       << "weight_alpha = " << g17(cfg.weight_alpha) << '\n'
       << "twist = " << (cfg.twist ? "true" : "false") << '\n'
       << "seed = " << cfg.seed << '\n'
       << "n_neurons = " << cfg.n_neurons << '\n'
       << "harris_T = " << g17(cfg.harris_T) << '\n';
    os << "harris_eps_ladder = ";
    for (size_t i = 0; i < cfg.harris_eps_ladder.size(); ++i)
        os << (i ? "," : "") << g17(cfg.harris_eps_ladder[i]);
    os << '\n';
    os << "out_dir = " << cfg.out_dir << '\n';
    return os.str();
}

} // namespace vck
