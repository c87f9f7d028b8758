#include "atloss_cli/config.hpp"

#include <charconv>
#include <concepts>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <type_traits>

#include "atloss/error.hpp"
#include "atloss/format.hpp"
#include "atloss/random.hpp"

namespace atloss::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    if (trim(s).empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto comma = s.find(',', start);
        out.push_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

// Value codecs. decode throws ConfigError with the offending text.

template <typename T>
T decode_number(std::string_view s) {
    T v{};
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
        throw ConfigError("not a valid number: '" + std::string(s) + "'");
    }
    return v;
}

std::string encode(double v) { return format_double(v); }
std::string encode(bool v) { return v ? "true" : "false"; }
template <std::integral T>
std::string encode(T v) {
    return std::to_string(v);
}
std::string encode(const std::string& v) { return v; }
std::string encode(train::LossKind v) { return std::string(train::to_string(v)); }
std::string encode(train::Track v) { return std::string(train::to_string(v)); }
std::string encode(AnnealShape v) { return std::string(to_string(v)); }
std::string encode(data::NoiseKind v) { return std::string(data::to_string(v)); }

template <typename T>
std::string encode(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += encode(v[i]);
    }
    return out;
}

template <typename T>
void decode(std::string_view s, T& out);

template <typename Parse>
auto wrap_parse(std::string_view s, Parse&& parse) {
    try {
        return parse(s);
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

template <typename T>
void decode(std::string_view s, T& out) {
    if constexpr (std::is_same_v<T, bool>) {
        if (s == "true") out = true;
        else if (s == "false") out = false;
        else throw ConfigError("expected true or false, got '" + std::string(s) + "'");
    } else if constexpr (std::is_same_v<T, std::string>) {
        out = std::string(s);
    } else if constexpr (std::is_same_v<T, train::LossKind>) {
        out = wrap_parse(s, [](std::string_view v) { return train::parse_loss_kind(v); });
    } else if constexpr (std::is_same_v<T, train::Track>) {
        out = wrap_parse(s, [](std::string_view v) { return train::parse_track(v); });
    } else if constexpr (std::is_same_v<T, AnnealShape>) {
        out = wrap_parse(s, [](std::string_view v) { return parse_anneal_shape(v); });
    } else if constexpr (std::is_same_v<T, data::NoiseKind>) {
        out = wrap_parse(s, [](std::string_view v) { return data::parse_noise_kind(v); });
    } else if constexpr (std::is_arithmetic_v<T>) {
        out = decode_number<T>(s);
    } else {
        out.clear();
        for (auto item : split_list(s)) {
            typename T::value_type v{};
            decode(item, v);
            out.push_back(v);
        }
    }
}

struct Binding {
    std::string section;
    std::string key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, std::string_view)> set;
};

template <typename Access>
Binding bind(std::string section, std::string key, Access access) {
    return {std::move(section), std::move(key),
            [access](const ExperimentConfig& c) { return encode(access(c)); },
            [access](ExperimentConfig& c, std::string_view v) { decode(v, access(c)); }};
}

#define ATLOSS_BIND(section, key, expr) bind(section, key, [](auto& c) -> auto& { return expr; })

const std::vector<Binding>& bindings() {
    static const std::vector<Binding> table = {
        ATLOSS_BIND("run", "seed", c.seed),

        ATLOSS_BIND("data", "source", c.data.source),
        ATLOSS_BIND("data", "eval_source", c.data.eval_source),
        ATLOSS_BIND("data", "height", c.data.height),
        ATLOSS_BIND("data", "width", c.data.width),
        ATLOSS_BIND("data", "windows", c.data.windows),
        ATLOSS_BIND("data", "eval_windows", c.data.eval_windows),
        ATLOSS_BIND("data", "data_seed", c.data.data_seed),
        ATLOSS_BIND("data", "eval_seed", c.data.eval_seed),
        ATLOSS_BIND("data", "dt_minutes", c.data.dt_minutes),
        ATLOSS_BIND("data", "refine", c.data.refine),
        ATLOSS_BIND("data", "tukey_k", c.data.tukey_k),

        ATLOSS_BIND("storm", "cells", c.data.storm.cells),
        ATLOSS_BIND("storm", "amp_min", c.data.storm.amp_min),
        ATLOSS_BIND("storm", "amp_max", c.data.storm.amp_max),
        ATLOSS_BIND("storm", "sigma_min", c.data.storm.sigma_min),
        ATLOSS_BIND("storm", "sigma_max", c.data.storm.sigma_max),
        ATLOSS_BIND("storm", "velocity_row", c.data.storm.velocity_row),
        ATLOSS_BIND("storm", "velocity_col", c.data.storm.velocity_col),
        ATLOSS_BIND("storm", "jitter", c.data.storm.jitter),
        ATLOSS_BIND("storm", "lifetime", c.data.storm.lifetime),
        ATLOSS_BIND("storm", "background", c.data.storm.background),
        ATLOSS_BIND("storm", "dry_probability", c.data.storm.dry_probability),
        ATLOSS_BIND("storm", "dry_length", c.data.storm.dry_length),
        ATLOSS_BIND("storm", "clutter_fraction", c.data.storm.clutter_fraction),
        ATLOSS_BIND("storm", "clutter_min", c.data.storm.clutter_min),
        ATLOSS_BIND("storm", "clutter_max", c.data.storm.clutter_max),

        ATLOSS_BIND("loss", "theta", c.train.at.theta),
        ATLOSS_BIND("loss", "perturbation_scale", c.train.at.perturbation_scale),
        ATLOSS_BIND("loss", "z_clamp", c.train.at.z_clamp),
        ATLOSS_BIND("loss", "deterministic", c.train.at.deterministic),
        ATLOSS_BIND("loss", "shared_z", c.train.at.shared_z),
        ATLOSS_BIND("loss", "z_seed", c.train.at.seed),
        ATLOSS_BIND("loss", "huber_delta", c.train.huber_delta),
        ATLOSS_BIND("loss", "charbonnier_epsilon", c.train.charbonnier_epsilon),

        ATLOSS_BIND("schedule", "tau_start", c.train.schedule.tau_start),
        ATLOSS_BIND("schedule", "tau_floor", c.train.schedule.tau_floor),
        ATLOSS_BIND("schedule", "total_epochs", c.train.schedule.total_epochs),
        ATLOSS_BIND("schedule", "shape", c.train.schedule.shape),

        ATLOSS_BIND("train", "loss", c.train.loss),
        ATLOSS_BIND("train", "track", c.train.track),
        ATLOSS_BIND("train", "noise_kind", c.train_noise),
        ATLOSS_BIND("train", "epochs", c.train.epochs),
        ATLOSS_BIND("train", "batch_size", c.train.batch_size),
        ATLOSS_BIND("train", "input_frames", c.train.input_frames),
        ATLOSS_BIND("train", "hidden_channels", c.train.hidden_channels),
        ATLOSS_BIND("train", "lr", c.train.adam.lr),
        ATLOSS_BIND("train", "beta1", c.train.adam.beta1),
        ATLOSS_BIND("train", "beta2", c.train.adam.beta2),
        ATLOSS_BIND("train", "adam_eps", c.train.adam.eps),

        ATLOSS_BIND("noise", "kinds", c.noise.kinds),
        ATLOSS_BIND("noise", "fraction", c.noise.fraction),
        ATLOSS_BIND("noise", "min_fraction", c.noise.min_fraction),
        ATLOSS_BIND("noise", "max_fraction", c.noise.max_fraction),

        ATLOSS_BIND("consistency", "losses", c.consistency.losses),
        ATLOSS_BIND("consistency", "seeds", c.consistency.seeds),
        ATLOSS_BIND("consistency", "plots", c.consistency.plots),

        ATLOSS_BIND("gradcheck", "cases", c.gradcheck.cases),
        ATLOSS_BIND("gradcheck", "tolerance", c.gradcheck.tolerance),
        ATLOSS_BIND("gradcheck", "fd_step", c.gradcheck.fd_step),
        ATLOSS_BIND("gradcheck", "layer_tolerance", c.gradcheck.layer_tolerance),
        ATLOSS_BIND("gradcheck", "layer_step", c.gradcheck.layer_step),
        ATLOSS_BIND("gradcheck", "error_floor", c.gradcheck.error_floor),

        ATLOSS_BIND("lipschitz", "taus", c.lipschitz.taus),
        ATLOSS_BIND("lipschitz", "points", c.lipschitz.points),
        ATLOSS_BIND("lipschitz", "half_width", c.lipschitz.half_width),
        ATLOSS_BIND("lipschitz", "slack", c.lipschitz.slack),
        ATLOSS_BIND("lipschitz", "zeta_tolerance", c.lipschitz.zeta_tolerance),

        ATLOSS_BIND("penalty", "k", c.penalty.k),
        ATLOSS_BIND("penalty", "instances", c.penalty.instances),
        ATLOSS_BIND("penalty", "tau", c.penalty.tau),
        ATLOSS_BIND("penalty", "margin", c.penalty.margin),
    };
    return table;
}

#undef ATLOSS_BIND

} // namespace

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(data.height > 0 && data.width > 0, "data.height and data.width must be positive");
    require(data.windows > 0 && data.eval_windows > 0, "data.windows and data.eval_windows must be positive");
    require(data.dt_minutes > 0.0, "data.dt_minutes must be > 0");
    require(data.tukey_k >= 0.0, "data.tukey_k must be >= 0");
    require(!noise.kinds.empty(), "noise.kinds must list at least one kind");
    require(!consistency.losses.empty(), "consistency.losses must list at least one loss");
    require(!consistency.seeds.empty(), "consistency.seeds must list at least one seed");
    require(gradcheck.cases > 0 && gradcheck.tolerance > 0.0 && gradcheck.fd_step > 0.0,
            "gradcheck cases, tolerance and fd_step must be positive");
    require(gradcheck.layer_tolerance > 0.0 && gradcheck.layer_step > 0.0 && gradcheck.error_floor > 0.0,
            "gradcheck layer_tolerance, layer_step and error_floor must be positive");
    require(!lipschitz.taus.empty() && lipschitz.points >= 2 && lipschitz.half_width > 0.0,
            "lipschitz needs taus, at least 2 points and a positive half_width");
    for (double t : lipschitz.taus) require(t > 0.0 && t <= 1.0, "lipschitz.taus must lie in (0, 1]");
    require(penalty.instances > 0, "penalty.instances must be positive");
    try {
        data.storm.validate();
        for (auto kind : noise.kinds) track_config(train.loss, seed, train::Track::dirty, kind).validate();
        track_config(train.loss, seed, train::Track::clean, train_noise).validate();
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

train::TrainConfig ExperimentConfig::track_config(train::LossKind loss, std::uint64_t run_seed, train::Track track,
                                                  data::NoiseKind kind) const {
    train::TrainConfig t = train;
    t.loss = loss;
    t.seed = run_seed;
    t.track = track;
    t.noise.reset();
    if (track == train::Track::dirty) {
        data::NoiseSpec spec;
        spec.kind = kind;
        spec.fraction = noise.fraction;
        spec.min_fraction = noise.min_fraction;
        spec.max_fraction = noise.max_fraction;
        spec.seed = derive_seed(run_seed, 0x401, static_cast<std::uint64_t>(kind));
        t.noise = spec;
    }
    return t;
}

ExperimentConfig parse_config(std::string_view text) {
    std::map<std::pair<std::string, std::string>, const Binding*> index;
    for (const auto& b : bindings()) index[{b.section, b.key}] = &b;

    ExperimentConfig config;
    std::map<std::pair<std::string, std::string>, std::size_t> seen;
    std::string section;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            bool known = false;
            for (const auto& b : bindings()) known = known || b.section == section;
            if (!known) throw ConfigError(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
        if (section.empty()) throw ConfigError(where + "key outside of any section");
        const std::string key(trim(line.substr(0, eq)));
        const auto it = index.find({section, key});
        if (it == index.end()) throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
        if (auto [pos, fresh] = seen.emplace(std::pair{section, key}, line_no); !fresh) {
            throw ConfigError(where + "duplicate key '" + key + "' (first set on line " +
                              std::to_string(pos->second) + ")");
        }
        try {
            it->second->set(config, trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(where + section + "." + key + ": " + e.what());
        }
    }
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& config) {
    std::string out;
    std::string section;
    for (const auto& b : bindings()) {
        if (b.section != section) {
            if (!section.empty()) out += '\n';
            section = b.section;
            out += "[" + section + "]\n";
        }
        out += b.key + " = " + b.get(config) + "\n";
    }
    return out;
}

} // namespace atloss::cli
