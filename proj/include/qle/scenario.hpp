#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <toml.hpp>

#include "qle/errors.hpp"
#include "qle/initial_data.hpp"
#include "qle/microlocal.hpp"
#include "qle/observable.hpp"
#include "qle/potential.hpp"

namespace qle {

enum class Quantity { echo, pairing };
enum class TheoryKind { automatic, peres, none };

inline std::string to_string(Quantity q) { return q == Quantity::echo ? "echo" : "pairing"; }
inline std::string to_string(TheoryKind k) {
    switch (k) {
        case TheoryKind::automatic:
            return "auto";
        case TheoryKind::peres:
            return "peres";
        case TheoryKind::none:
            return "none";
    }
    return "";
}

// How a finite ladder is turned into a verdict.
struct VerdictRule {
    double final_gap = 0.05;  // gap at the last rung
    double jitter = 0.0;      // allowed rise between consecutive rungs
    int trend_rungs = 0;      // rungs (from the end) checked for the trend; 0 = all, -1 = none
    bool last_below_first = false;
    // Alternative rule: |sim - theory| <= deficit_ratio (1 - sim) on every row.
    std::optional<double> deficit_ratio;
};

struct ScenarioObservable {
    Observable observable;
    PrimitiveDirection dir{1, 0};
    Convention convention = Convention::input_mode;
};

struct Scenario {
    std::string name;
    std::string description;
    InitialDataSpec initial;
    TrigPotential potential;
    RegimeSpec regime{1.0, 1.5};
    std::vector<double> ladder;  // strictly decreasing hbar values
    std::vector<double> t_grid;  // rescaled times
    std::vector<ScenarioObservable> observables;
    Quantity quantity = Quantity::echo;
    TheoryKind theory = TheoryKind::automatic;
    double dt_control = 1e-4;
    std::string output_dir;
    VerdictRule verdict;
    std::uint64_t config_hash = 0;
    std::string source_path;

    void validate() const {
        if (name.empty()) throw ConfigError("scenario needs a name");
        initial.validate();
        regime.validate();
        if (ladder.empty()) throw ConfigError("scenario '" + name + "': empty hbar ladder");
        for (std::size_t i = 0; i < ladder.size(); ++i) {
            if (!(ladder[i] > 0.0 && ladder[i] < 1.0)) throw ConfigError("hbar values must lie in (0, 1)");
            if (i > 0 && !(ladder[i] < ladder[i - 1]))
                throw ConfigError("scenario '" + name + "': hbar ladder must be strictly decreasing");
        }
        for (double t : t_grid)
            if (!(t >= 0.0)) throw ConfigError("times must be nonnegative");
        if (quantity == Quantity::pairing) {
            if (observables.empty()) throw ConfigError("scenario '" + name + "': pairing needs observables");
            if (!(regime.epsilon(ladder.front()) > 0.0)) throw ConfigError("pairing needs a nonzero perturbation");
        }
        for (const auto& o : observables) o.observable.validate();
        if (!(dt_control > 0.0)) throw ConfigError("dt_control must be positive");
        if (theory == TheoryKind::peres && quantity != Quantity::echo)
            throw ConfigError("the quadratic short-time model applies to echoes only");
    }
};

// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex;
    s.width(16);
    s.fill('0');
    s << v;
    return s.str();
}

namespace detail {

template <class T>
T require(const toml::node_view<const toml::node>& n, const std::string& what) {
    if (auto v = n.value<T>()) return *v;
    throw ConfigError("missing or mistyped field '" + what + "'");
}

template <class T>
T get_or(const toml::node_view<const toml::node>& n, T fallback) {
    if (auto v = n.value<T>()) return *v;
    return fallback;
}

inline Vec2 vec2(const toml::node_view<const toml::node>& n, const std::string& what) {
    const auto* a = n.as_array();
    if (!a || a->size() != 2) throw ConfigError("field '" + what + "' must be a pair of numbers");
    Vec2 out{};
    for (std::size_t i = 0; i < 2; ++i) {
        auto v = (*a)[i].value<double>();
        if (!v) throw ConfigError("field '" + what + "' must be a pair of numbers");
        out[i] = *v;
    }
    return out;
}

inline Mode mode(const toml::node_view<const toml::node>& n, const std::string& what) {
    const auto* a = n.as_array();
    if (!a || a->size() != 2) throw ConfigError("field '" + what + "' must be a pair of integers");
    auto x = (*a)[0].value<std::int64_t>();
    auto y = (*a)[1].value<std::int64_t>();
    if (!x || !y) throw ConfigError("field '" + what + "' must be a pair of integers");
    return {*x, *y};
}

inline std::vector<double> numbers(const toml::node_view<const toml::node>& n, const std::string& what) {
    std::vector<double> out;
    if (!n) return out;
    const auto* a = n.as_array();
    if (!a) throw ConfigError("field '" + what + "' must be an array of numbers");
    for (const auto& e : *a) {
        auto v = e.value<double>();
        if (!v) throw ConfigError("field '" + what + "' must be an array of numbers");
        out.push_back(*v);
    }
    return out;
}

inline Profile profile(const toml::node_view<const toml::node>& t) {
    const auto kind = get_or<std::string>(t["profile"], "gaussian");
    const double w = get_or<double>(t["width"], 1.0);
    Profile p;
    if (kind == "gaussian") p = Profile::gaussian(w);
    else if (kind == "bump") p = Profile::bump(w);
    else throw ConfigError("unknown profile '" + kind + "'");
    p.validate();
    return p;
}

inline InitialComponent component(const toml::node_view<const toml::node>& t) {
    const auto type = require<std::string>(t["type"], "type");
    if (type == "plane_wave") {
        const auto family = get_or<std::string>(t["family"], "rational");
        if (family == "rational")
            return PlaneWaveRational{PrimitiveDirection::parse(get_or<std::string>(t["base"], "0/1")),
                                     get_or<double>(t["m0"], 0.0), get_or<double>(t["beta"], 0.0)};
        if (family == "golden") return PlaneWaveGolden{};
        if (family == "modes") {
            PlaneWaveModes m;
            const auto* a = t["modes"].as_array();
            if (!a || a->empty()) throw ConfigError("plane_wave family 'modes' needs a 'modes' list");
            for (const auto& e : *a) m.ks.push_back(mode(toml::node_view<const toml::node>(e), "modes"));
            return m;
        }
        throw ConfigError("unknown plane_wave family '" + family + "'");
    }
    if (type == "coherent") {
        CoherentSpec s{vec2(t["x0"], "x0"), vec2(t["xi0"], "xi0"), profile(t)};
        s.validate();
        return CoherentData{s};
    }
    throw ConfigError("unknown initial-data type '" + type + "'");
}

inline InitialDataSpec initial_data(const toml::node_view<const toml::node>& t) {
    if (!t) throw ConfigError("scenario needs an [initial] table");
    if (get_or<std::string>(t["type"], "") == "superposition") {
        InitialDataSpec out;
        const auto* a = t["components"].as_array();
        if (!a || a->empty()) throw ConfigError("superposition needs [[initial.components]]");
        for (const auto& e : *a) {
            const toml::node_view<const toml::node> c(e);
            out.components.push_back(component(c));
            out.weights.push_back(get_or<double>(c["weight"], 1.0));
        }
        return out;
    }
    return InitialDataSpec::single(component(t));
}

inline TrigPotential potential(const toml::node_view<const toml::node>& n) {
    if (!n) return {};
    const auto* a = n.as_array();
    if (!a) throw ConfigError("'potential' must be an array of {k, re, im} tables");
    std::vector<TrigPotential::Entry> es;
    for (const auto& e : *a) {
        const toml::node_view<const toml::node> v(e);
        es.push_back({mode(v["k"], "potential.k"), {get_or<double>(v["re"], 0.0), get_or<double>(v["im"], 0.0)}});
    }
    return TrigPotential::from_entries(es);
}

inline WindowFn window_fn(const toml::node_view<const toml::node>& n) {
    if (!n) return WindowFn::constant();
    const auto kind = get_or<std::string>(n["kind"], "constant");
    WindowFn f;
    if (kind == "constant") f = WindowFn::constant();
    else if (kind == "gaussian") f = WindowFn::gaussian(get_or<double>(n["center"], 0.0), require<double>(n["width"], "width"));
    else if (kind == "cosine")
        f = WindowFn::cosine(get_or<double>(n["center"], 0.0), require<double>(n["halfwidth"], "halfwidth"));
    else throw ConfigError("unknown profile kind '" + kind + "'");
    f.validate();
    return f;
}

inline ScenarioObservable observable(const toml::node_view<const toml::node>& n) {
    ScenarioObservable o;
    o.observable.name = get_or<std::string>(n["name"], "observable");
    o.dir = PrimitiveDirection::parse(get_or<std::string>(n["dir"], "1/0"));
    o.convention = parse_convention(get_or<std::string>(n["convention"], "input"));
    const auto* terms = n["terms"].as_array();
    if (!terms || terms->empty()) throw ConfigError("observable '" + o.observable.name + "' needs [[...terms]]");
    for (const auto& e : *terms) {
        const toml::node_view<const toml::node> t(e);
        ObservableTerm term;
        term.l = t["l"] ? mode(t["l"], "l") : Mode{};
        term.amplitude = {get_or<double>(t["re"], 1.0), get_or<double>(t["im"], 0.0)};
        term.eta = window_fn(t["eta"]);
        if (t["xi"]) term.xi_cutoff = window_fn(t["xi"]);
        o.observable.terms.push_back(term);
    }
    return o;
}

inline std::vector<double> ladder(const toml::node_view<const toml::node>& root) {
    if (root["hbar"]) return numbers(root["hbar"], "hbar");
    const auto l = root["ladder"];
    if (!l) throw ConfigError("scenario needs 'hbar' or a [ladder] table");
    std::vector<double> out;
    if (l["golden"]) {
        const auto range = numbers(l["golden"], "ladder.golden");
        if (range.size() != 2) throw ConfigError("ladder.golden must be [min_norm, max_norm]");
        auto pairs = PlaneWaveGolden::pairs(range[1]);
        for (auto it = pairs.begin(); it != pairs.end(); ++it)
            if (it->norm() >= range[0]) out.push_back(1.0 / it->norm());
        std::sort(out.begin(), out.end(), std::greater<>());
        return out;
    }
    const double base = get_or<double>(l["base"], 2.0);
    const auto from = require<std::int64_t>(l["from"], "ladder.from");
    const auto to = require<std::int64_t>(l["to"], "ladder.to");
    if (!(base > 1.0) || to < from) throw ConfigError("ladder needs base > 1 and from <= to");
    for (auto j = from; j <= to; ++j) out.push_back(std::pow(base, -static_cast<double>(j)));
    return out;
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text, const std::string& source = "<string>") {
    toml::table tbl;
    try {
        tbl = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << source << ": " << e.description() << " at line " << e.source().begin.line;
        throw ConfigError(msg.str());
    }
    const toml::node_view<const toml::node> root(tbl);
    Scenario s;
    s.source_path = source;
    s.config_hash = fnv1a(text);
    s.name = detail::require<std::string>(root["name"], "name");
    s.description = detail::get_or<std::string>(root["description"], "");
    s.initial = detail::initial_data(root["initial"]);
    s.potential = detail::potential(root["potential"]);
    s.regime = {detail::get_or<double>(root["regime"]["c"], 1.0), detail::require<double>(root["regime"]["alpha"], "regime.alpha")};
    const auto* modes = s.initial.components.size() == 1 ? std::get_if<PlaneWaveModes>(&s.initial.components[0]) : nullptr;
    s.ladder = (modes && !root["hbar"] && !root["ladder"]) ? modes->ladder() : detail::ladder(root);
    s.t_grid = detail::numbers(root["t"], "t");
    if (const auto* a = root["observables"].as_array())
        for (const auto& e : *a) s.observables.push_back(detail::observable(toml::node_view<const toml::node>(e)));
    const auto q = detail::get_or<std::string>(root["quantity"], "echo");
    if (q == "echo") s.quantity = Quantity::echo;
    else if (q == "pairing") s.quantity = Quantity::pairing;
    else throw ConfigError("quantity must be 'echo' or 'pairing'");
    const auto th = detail::get_or<std::string>(root["theory"], "auto");
    if (th == "auto") s.theory = TheoryKind::automatic;
    else if (th == "peres") s.theory = TheoryKind::peres;
    else if (th == "none") s.theory = TheoryKind::none;
    else throw ConfigError("theory must be 'auto', 'peres' or 'none'");
    s.dt_control = detail::get_or<double>(root["dt_control"], 1e-4);
    s.output_dir = detail::get_or<std::string>(root["output"], "results/" + s.name);
    const auto v = root["verdict"];
    s.verdict.final_gap = detail::get_or<double>(v["final_gap"], s.verdict.final_gap);
    s.verdict.jitter = detail::get_or<double>(v["jitter"], s.verdict.jitter);
    s.verdict.trend_rungs = static_cast<int>(detail::get_or<std::int64_t>(v["trend_rungs"], s.verdict.trend_rungs));
    s.verdict.last_below_first = detail::get_or<bool>(v["last_below_first"], s.verdict.last_below_first);
    if (auto d = v["deficit_ratio"].value<double>()) s.verdict.deficit_ratio = *d;
    s.validate();
    return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open scenario file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.string());
}

inline std::filesystem::path bundled_scenario_dir() {
    if (const char* env = std::getenv("QLE_SCENARIO_DIR")) return env;
#ifdef QLE_SCENARIO_DIR
    return QLE_SCENARIO_DIR;
#else
    return "scenarios";
#endif
}

inline std::vector<std::filesystem::path> list_scenarios(const std::filesystem::path& dir = bundled_scenario_dir()) {
    std::vector<std::filesystem::path> out;
    if (!std::filesystem::is_directory(dir)) return out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".toml") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace qle
