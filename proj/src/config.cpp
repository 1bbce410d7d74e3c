#include "nta/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace nta {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) return s.substr(1, s.size() - 2);
    return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    throw ConfigError("key '" + key + "': expected " + expected + ", got '" + value + "'");
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v, "a number");
    return out;
}

long long to_integer(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v, "an integer");
    return out;
}

int to_int(const std::string& key, const std::string& v) {
    const long long x = to_integer(key, v);
    if (x < -2147483647LL || x > 2147483647LL) bad_value(key, v, "a 32-bit integer");
    return static_cast<int>(x);
}

std::string fmt(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

template <typename E>
struct EnumName {
    E value;
    const char* name;
};

template <typename E, std::size_t N>
E to_enum(const std::string& key, const std::string& v, const EnumName<E> (&names)[N]) {
    for (const auto& n : names)
        if (v == n.name) return n.value;
    std::string expected = "one of";
    for (const auto& n : names) expected += std::string(" ") + n.name;
    throw ConfigError("key '" + key + "': expected " + expected + ", got '" + v + "'");
}

template <typename E, std::size_t N>
std::string from_enum(E v, const EnumName<E> (&names)[N]) {
    for (const auto& n : names)
        if (v == n.value) return n.name;
    return "?";
}

const EnumName<ModelKind> kModels[] = {{ModelKind::Gated, "gated"}, {ModelKind::Deep, "deep"},
                                       {ModelKind::Reduced, "reduced"}};
const EnumName<GateMode> kGateModes[] = {{GateMode::PerPath, "per_path"}, {GateMode::PerNeuron, "per_neuron"}};
const EnumName<NormGroup> kNormGroups[] = {{NormGroup::PerRow, "row"}, {NormGroup::Global, "global"}};
const EnumName<RateUnits> kUnits[] = {{RateUnits::PerOutputRow, "row"}, {RateUnits::Loss, "loss"}};
const EnumName<Regime> kRegimes[] = {{Regime::Flexible, "flexible"}, {Regime::Forgetful, "forgetful"}};
const EnumName<CurriculumKind> kCurricula[] = {{CurriculumKind::Alternate, "alternate"},
                                               {CurriculumKind::Composition, "composition"},
                                               {CurriculumKind::Sums, "sums"}};
const EnumName<CompositionMode> kCompositions[] = {{CompositionMode::Task, "task"},
                                                   {CompositionMode::Subtask, "subtask"}};
const EnumName<Orthogonality> kOrth[] = {{Orthogonality::PerRow, "row"}, {Orthogonality::Full, "full"}};

struct Field {
    std::function<void(RunConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define NTA_DOUBLE(key, member)                                                                                 \
    {key, Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_double(k, v); }, \
                [](const RunConfig& c) { return fmt(c.member); }}}
#define NTA_INT(key, member)                                                                                 \
    {key, Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_int(k, v); }, \
                [](const RunConfig& c) { return std::to_string(c.member); }}}
#define NTA_ENUM(key, member, table)                                                                                \
    {key, Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.member = to_enum(k, v, table); }, \
                [](const RunConfig& c) { return from_enum(c.member, table); }}}
#define NTA_STRING(key, member)                                                                  \
    {key, Field{[](RunConfig& c, const std::string&, const std::string& v) { c.member = v; }, \
                [](const RunConfig& c) { return c.member; }}}

const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> table = {
        {"preset", Field{[](RunConfig& c, const std::string&, const std::string& v) {
                             RunConfig p = make_preset(v);
                             p.seed = c.seed;
                             c = p;
                         },
                         [](const RunConfig& c) { return c.preset; }}},
        NTA_ENUM("model", model, kModels),
        NTA_INT("paths", paths),
        NTA_INT("teachers", teachers),
        NTA_INT("d_in", d_in),
        NTA_INT("d_hid", d_hid),
        NTA_INT("d_out", d_out),
        NTA_ENUM("gate_mode", gate_mode, kGateModes),
        NTA_ENUM("rate_units", rate_units, kUnits),
        NTA_DOUBLE("lambda_nonneg", reg.nonneg),
        NTA_DOUBLE("lambda_norm_l1", reg.norm_l1),
        NTA_DOUBLE("lambda_norm_l2", reg.norm_l2),
        NTA_DOUBLE("lambda_w", reg.weight_decay),
        NTA_ENUM("norm_group", reg.norm_group, kNormGroups),
        NTA_DOUBLE("tau_w", tau_w),
        NTA_DOUBLE("tau_c", tau_c),
        NTA_DOUBLE("sigma", sigma),
        NTA_ENUM("regime", regime, kRegimes),
        NTA_DOUBLE("control_tau_c", control_tau_c),
        NTA_ENUM("curriculum", curriculum, kCurricula),
        NTA_ENUM("composition", composition, kCompositions),
        NTA_INT("n_blocks", n_blocks),
        NTA_INT("train_blocks", train_blocks),
        NTA_DOUBLE("tau_B", tau_B),
        NTA_DOUBLE("dt", dt),
        NTA_INT("batch_size", batch_size),
        NTA_DOUBLE("similarity", similarity),
        NTA_ENUM("orthogonality", orthogonality, kOrth),
        {"seed", Field{[](RunConfig& c, const std::string& k, const std::string& v) {
                           const long long x = to_integer(k, v);
                           if (x < 0) bad_value(k, v, "a nonnegative integer");
                           c.seed = static_cast<std::uint64_t>(x);
                       },
                       [](const RunConfig& c) { return std::to_string(c.seed); }}},
        NTA_INT("seeds", seeds),
        NTA_INT("stride", stride),
        NTA_DOUBLE("threshold", threshold),
        NTA_DOUBLE("regime_cut", regime_cut),
        NTA_STRING("sweep_x", sweep_x),
        NTA_STRING("sweep_y", sweep_y),
        NTA_INT("grid_points", grid_points),
        NTA_DOUBLE("total_time", total_time),
        NTA_DOUBLE("block_min", block_min),
        NTA_DOUBLE("block_max", block_max),
        NTA_DOUBLE("ratio_min", ratio_min),
        NTA_DOUBLE("ratio_max", ratio_max),
        NTA_DOUBLE("lambda_min", lambda_min),
        NTA_DOUBLE("lambda_max", lambda_max),
        NTA_STRING("lambda_rule", lambda_rule),
        NTA_DOUBLE("max_dt_fraction", max_dt_fraction),
        NTA_INT("workers", workers),
    };
    return table;
}

#undef NTA_DOUBLE
#undef NTA_INT
#undef NTA_ENUM
#undef NTA_STRING

const Field& field(const std::string& key) {
    for (const auto& [name, f] : fields())
        if (name == key) return f;
    throw ConfigError("unknown configuration key '" + key + "'");
}

} // namespace

RegularizerConfig RunConfig::effective_reg() const {
    RegularizerConfig r = reg;
    if (regime == Regime::Forgetful) {
        r.nonneg = 0.0;
        r.norm_l1 = 0.0;
        r.norm_l2 = 0.0;
    }
    return r;
}

double RunConfig::effective_tau_c() const {
    if (regime != Regime::Forgetful) return tau_c;
    return control_tau_c > 0.0 ? control_tau_c : tau_w;
}

void RunConfig::validate() const {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    require(paths >= 1 && teachers >= 1, "paths and teachers must be positive");
    require(d_in >= 1 && d_out >= 1 && d_hid >= 1, "dimensions must be positive");
    require(tau_w > 0.0 && tau_c > 0.0, "timescales must be positive");
    require(control_tau_c >= 0.0, "control_tau_c must be nonnegative");
    require(sigma >= 0.0, "sigma must be nonnegative");
    require(n_blocks >= 1, "n_blocks must be positive");
    require(train_blocks >= 0 && train_blocks <= n_blocks, "train_blocks must lie in [0, n_blocks]");
    require(tau_B > 0.0, "tau_B must be positive");
    require(dt > 0.0, "dt must be positive");
    require(batch_size >= 0, "batch_size must be nonnegative (0 = expectation)");
    require(seeds >= 1, "seeds must be positive");
    require(stride >= 1, "stride must be positive");
    require(grid_points >= 2, "grid_points must be at least 2");
    require(total_time > 0.0, "total_time must be positive");
    require(block_min > 0.0 && block_max >= block_min, "block range must be positive and ordered");
    require(ratio_min > 0.0 && ratio_max >= ratio_min, "ratio range must be positive and ordered");
    require(lambda_min >= 0.0 && lambda_max >= lambda_min, "lambda range must be nonnegative and ordered");
    require(lambda_rule == "nta" || lambda_rule == "fc", "lambda_rule must be nta or fc");
    require(max_dt_fraction > 0.0, "max_dt_fraction must be positive");
    require(workers >= 0, "workers must be nonnegative");
    require(similarity >= 0.0 && similarity < 1.0, "similarity must lie in [0, 1)");
    reg.validate();
    const double steps = tau_B / dt;
    require(std::abs(steps - std::round(steps)) < 1e-6 * std::max(1.0, steps),
            "tau_B must be an integer multiple of dt");
    if (curriculum != CurriculumKind::Alternate) require(teachers == 3, "composite curricula need three teachers");
    if (model == ModelKind::Reduced) require(paths == 2 && teachers == 2, "the reduced model needs two paths and two teachers");
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& f : fields()) out.push_back(f.first);
    return out;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    field(key).set(cfg, key, value);
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) { return field(key).get(cfg); }

std::vector<std::pair<std::string, std::string>> config_items(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [name, f] : fields()) out.emplace_back(name, f.get(cfg));
    return out;
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    apply_config_text(cfg, text, origin);
    return cfg;
}

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty() || line.front() == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = unquote(trim(line.substr(eq + 1)));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        for (const auto& e : entries)
            if (e.first == key) throw ConfigError(origin + ": duplicate key '" + key + "'");
        entries.emplace_back(key, value);
    }
    std::stable_partition(entries.begin(), entries.end(), [](const auto& e) { return e.first == "preset"; });
    for (const auto& [k, v] : entries) {
        try {
            set_config_value(cfg, k, v);
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ": " + e.what());
        }
    }
}

std::string read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig load_config_file(const std::string& path) { return parse_config_text(read_config_file(path), path); }

void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
    set_config_value(cfg, trim(assignment.substr(0, eq)), unquote(trim(assignment.substr(eq + 1))));
}

std::string format_config(const RunConfig& cfg) {
    static const std::map<std::string, std::string> notes = {
        {"preset", "base preset; the keys below override it"},
        {"model", "gated | deep | reduced"},
        {"paths", "student paths P (hidden units come from d_hid for the deep model)"},
        {"teachers", "number of teachers M"},
        {"d_in", "input dimension"},
        {"d_hid", "hidden width of the deep model"},
        {"d_out", "output dimension"},
        {"gate_mode", "per_path: one gate per path | per_neuron: one gate per path and output row"},
        {"rate_units", "row: weight rate scaled by d_out | loss: plain gradient flow on the loss"},
        {"lambda_nonneg", "penalty on negative gates"},
        {"lambda_norm_l1", "penalty pulling the L1 norm of the gates to 1"},
        {"lambda_norm_l2", "penalty pulling the L2 norm of the gates to 1"},
        {"lambda_w", "weight decay on the path weights"},
        {"norm_group", "row: norm per output row | global: one norm over all gates"},
        {"tau_w", "weight timescale (first layer for the deep model)"},
        {"tau_c", "gate timescale (second layer for the deep model)"},
        {"sigma", "initial weight scale"},
        {"regime", "flexible | forgetful (gate regularizers off, slow gates)"},
        {"control_tau_c", "gate timescale of the forgetful control; 0 uses tau_w"},
        {"curriculum", "alternate | composition | sums"},
        {"composition", "task: summed teachers | subtask: rows drawn from two teachers"},
        {"n_blocks", "total number of blocks"},
        {"train_blocks", "single-teacher blocks before the composite phase"},
        {"tau_B", "block length"},
        {"dt", "integrator step"},
        {"batch_size", "samples per step; 0 integrates the expected gradient"},
        {"similarity", "cosine between corresponding teacher rows"},
        {"orthogonality", "row: corresponding rows orthogonal | full: all rows orthogonal"},
        {"seed", "first seed"},
        {"seeds", "number of consecutive seeds"},
        {"stride", "integrator steps between logged rows"},
        {"threshold", "loss level for the per-block time to threshold"},
        {"regime_cut", "total alignment above which a run is labelled flexible"},
        {"sweep_x", "first sweep axis: tau_B | ratio | lambda"},
        {"sweep_y", "second sweep axis"},
        {"grid_points", "points per sweep axis"},
        {"total_time", "fixed training time of every sweep cell"},
        {"block_min", "shortest block on the tau_B axis"},
        {"block_max", "longest block on the tau_B axis"},
        {"ratio_min", "smallest tau_w / tau_c on the ratio axis"},
        {"ratio_max", "largest tau_w / tau_c on the ratio axis"},
        {"lambda_min", "smallest regularization strength"},
        {"lambda_max", "largest regularization strength"},
        {"lambda_rule", "how lambda splits into the regularizers: nta | fc"},
        {"max_dt_fraction", "largest dt relative to the fastest timescale in a sweep cell"},
        {"workers", "worker threads; 0 uses every core"},
    };
    std::ostringstream os;
    for (const auto& [k, v] : config_items(cfg)) {
        const auto it = notes.find(k);
        if (it != notes.end()) os << "# " << it->second << "\n";
        os << k << " = " << v << "\n";
    }
    return os.str();
}

} // namespace nta
