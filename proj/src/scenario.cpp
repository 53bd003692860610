#include "surge/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <system_error>

namespace surge {

// -------------------------------------------------------------
// Number formatting / parsing
// -------------------------------------------------------------

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return {buf, res.ptr};
}

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::optional<double> to_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<std::uint64_t> to_uint(std::string_view s) {
    s = trim(s);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

// -------------------------------------------------------------
// Sectioned key/value document
// -------------------------------------------------------------

struct Entry {
    std::string value;
    std::size_t line = 0;
};

using Section = std::map<std::string, Entry, std::less<>>;
using Document = std::map<std::string, Section, std::less<>>;

const std::map<std::string, std::set<std::string>, std::less<>>& schema() {
    static const std::map<std::string, std::set<std::string>, std::less<>> s = {
        {"scenario", {"name"}},
        {"fluid", {"density", "bulk_modulus", "gravity"}},
        {"pipes",
         {"count", "length", "diameter", "wall_thickness", "friction_factor", "youngs_modulus",
          "anchoring_coefficient", "yield_stress"}},
        {"nodes", {"elevations", "terminal"}},
        {"boundary", {"upstream_head", "downstream_head", "entrance_loss", "valve_discharge_coefficient"}},
        {"valve", {"closure_time", "law", "exponent", "table"}},
        {"burst", {"mode", "threshold_fraction", "lambda", "seed", "forced"}},
        {"run", {"duration", "steps"}},
        {"measurement", {"variance", "seed"}},
        {"filter", {"initial_variance", "head_variance", "flow_variance", "leak_variance", "measurement_variance"}},
        {"output", {"timeseries", "bursts", "manifest", "measurements", "estimates"}},
        {"manifest", {"version", "config_hash", "wave_speed", "dt", "steps", "burst_seed", "noise_seed", "mode"}},
    };
    return s;
}

Document tokenize(std::string_view text) {
    Document doc;
    std::string current;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const auto line = trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ScenarioError("unterminated section header", line_no);
            current = std::string(trim(line.substr(1, line.size() - 2)));
            if (!schema().contains(current)) throw ScenarioError("unknown section [" + current + "]", line_no);
            doc[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ScenarioError("expected 'key = value'", line_no);
        if (current.empty()) throw ScenarioError("key outside of any section", line_no);
        const std::string key(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw ScenarioError("empty key", line_no);
        if (!schema().at(current).contains(key))
            throw ScenarioError("unknown key '" + key + "' in [" + current + "]", line_no, current + "." + key);
        auto& sec = doc[current];
        if (sec.contains(key)) throw ScenarioError("duplicate key '" + key + "'", line_no, current + "." + key);
        sec[key] = {std::string(value), line_no};
    }
    return doc;
}

class Reader {
public:
    explicit Reader(const Document& doc) : doc_(doc) {}

    const Entry* find(std::string_view section, std::string_view key) const {
        const auto s = doc_.find(section);
        if (s == doc_.end()) return nullptr;
        const auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }

    bool has(std::string_view section, std::string_view key) const { return find(section, key) != nullptr; }
    bool has_section(std::string_view section) const { return doc_.contains(section); }

    const Entry& require(std::string_view section, std::string_view key) const {
        if (const auto* e = find(section, key)) return *e;
        throw ScenarioError("missing required field " + field(section, key), 0, field(section, key));
    }

    double number(std::string_view section, std::string_view key) const {
        const auto& e = require(section, key);
        if (auto v = to_double(e.value); v && std::isfinite(*v)) return *v;
        throw ScenarioError("field " + field(section, key) + " is not a finite number", e.line, field(section, key));
    }

    double number_or(std::string_view section, std::string_view key, double fallback) const {
        return has(section, key) ? number(section, key) : fallback;
    }

    std::uint64_t integer(std::string_view section, std::string_view key) const {
        const auto& e = require(section, key);
        if (auto v = to_uint(e.value)) return *v;
        throw ScenarioError("field " + field(section, key) + " is not a non-negative integer", e.line,
                            field(section, key));
    }

    std::string text(std::string_view section, std::string_view key, std::string fallback = {}) const {
        const auto* e = find(section, key);
        return e ? e->value : fallback;
    }

    static std::string field(std::string_view section, std::string_view key) {
        return std::string(section) + "." + std::string(key);
    }

private:
    const Document& doc_;
};

[[noreturn]] void semantic(const std::string& field, const std::string& what) {
    throw ScenarioError("field " + field + ": " + what, 0, field);
}

BurstMode parse_mode(const std::string& s, const std::string& field) {
    if (s == "none") return BurstMode::none;
    if (s == "deterministic") return BurstMode::deterministic;
    if (s == "probabilistic") return BurstMode::probabilistic;
    semantic(field, "expected none, deterministic or probabilistic, got '" + s + "'");
}

std::string mode_name(BurstMode m) {
    switch (m) {
        case BurstMode::none: return "none";
        case BurstMode::deterministic: return "deterministic";
        case BurstMode::probabilistic: return "probabilistic";
    }
    return "none";
}

}  // namespace

// -------------------------------------------------------------
// ScenarioConfig
// -------------------------------------------------------------

TimeGrid ScenarioConfig::grid() const {
    TimeGrid g = TimeGrid::for_duration(network, duration);
    if (steps) g.steps = *steps;
    return g;
}

void ScenarioConfig::validate() const {
    try {
        network.validate();
    } catch (const std::invalid_argument& e) {
        throw ScenarioError(std::string("network: ") + e.what(), 0, "network");
    }
    if (network.has_valve() && !valve) semantic("valve", "a valve terminal needs a [valve] section");
    if (!network.has_valve() && valve) semantic("valve", "a dead-end terminal cannot have a valve schedule");
    if (network.has_valve()) {
        if (!(network.upstream_head > *network.downstream_head))
            semantic("boundary.downstream_head", "must be below upstream_head");
    }
    try {
        burst.validate();
    } catch (const std::invalid_argument& e) {
        semantic("burst", e.what());
    }
    if (!steps && !(duration > 0.0)) semantic("run.duration", "must be > 0");
    for (const auto& f : forced_bursts)
        if (f.node == 0 || f.node + 1 >= network.node_count())
            semantic("burst.forced", "node " + std::to_string(f.node) + " is not an interior node");
    if (!(noise_variance >= 0.0)) semantic("measurement.variance", "must be >= 0");
    if (!(filter.initial_variance > 0.0)) semantic("filter.initial_variance", "must be > 0");
    if (!(filter.head_variance >= 0.0) || !(filter.flow_variance >= 0.0) || !(filter.leak_variance >= 0.0))
        semantic("filter", "process variances must be >= 0");
    if (!(filter.measurement_variance > 0.0)) semantic("filter.measurement_variance", "must be > 0");
}

ScenarioConfig parse_scenario(std::string_view text) {
    const Document doc = tokenize(text);
    const Reader r(doc);
    ScenarioConfig c;

    c.name = r.text("scenario", "name", "custom");

    auto& net = c.network;
    net.fluid.density = r.number("fluid", "density");
    net.fluid.bulk_modulus = r.number("fluid", "bulk_modulus");
    net.fluid.gravity = r.number("fluid", "gravity");

    const auto pipe_count = r.integer("pipes", "count");
    PipeSegment pipe;
    pipe.length = r.number("pipes", "length");
    pipe.diameter = r.number("pipes", "diameter");
    pipe.wall_thickness = r.number("pipes", "wall_thickness");
    pipe.friction_factor = r.number("pipes", "friction_factor");
    pipe.youngs_modulus = r.number("pipes", "youngs_modulus");
    pipe.anchoring_coefficient = r.number_or("pipes", "anchoring_coefficient", 1.0);
    net.yield_stress = r.number("pipes", "yield_stress");

    const auto& elev_entry = r.require("nodes", "elevations");
    std::vector<double> elevations;
    for (auto tok : split(elev_entry.value, ',')) {
        const auto v = to_double(tok);
        if (!v || !std::isfinite(*v))
            throw ScenarioError("nodes.elevations contains a non-numeric entry", elev_entry.line, "nodes.elevations");
        elevations.push_back(*v);
    }
    if (pipe_count + 1 != elevations.size())
        semantic("pipes.count", "pipes.count (" + std::to_string(pipe_count) + ") must equal the number of node "
                                "elevations minus one (" + std::to_string(elevations.size()) + " elevations)");
    if (elevations.size() < 3) semantic("nodes.elevations", "at least 3 nodes are required");

    const std::string terminal = r.text("nodes", "terminal", "valve");
    if (terminal != "valve" && terminal != "dead_end")
        semantic("nodes.terminal", "expected valve or dead_end, got '" + terminal + "'");

    net.pipes.assign(pipe_count, pipe);
    for (std::size_t i = 0; i < elevations.size(); ++i) {
        NodeKind kind = NodeKind::interior;
        if (i == 0) kind = NodeKind::supply_reservoir;
        else if (i + 1 == elevations.size())
            kind = terminal == "valve" ? NodeKind::valve_to_reservoir : NodeKind::dead_end;
        net.nodes.push_back({i, elevations[i], kind});
    }

    net.upstream_head = r.number("boundary", "upstream_head");
    net.entrance_loss = r.number_or("boundary", "entrance_loss", 0.5);
    net.valve_discharge_coefficient = r.number_or("boundary", "valve_discharge_coefficient", 0.6);
    if (terminal == "valve") {
        net.downstream_head = r.number("boundary", "downstream_head");
        const double tc = r.number("valve", "closure_time");
        const std::string law = r.text("valve", "law", "power");
        try {
            if (law == "power") {
                c.valve = ValveSchedule::power_law(tc, r.number_or("valve", "exponent", 1.0));
            } else if (law == "table") {
                const auto& e = r.require("valve", "table");
                std::vector<std::pair<double, double>> pts;
                for (auto tok : split(e.value, ',')) {
                    const auto parts = split(tok, ':');
                    const auto t = parts.size() == 2 ? to_double(parts[0]) : std::nullopt;
                    const auto v = parts.size() == 2 ? to_double(parts[1]) : std::nullopt;
                    if (!t || !v) throw ScenarioError("valve.table entries must be 'fraction:opening'", e.line,
                                                      "valve.table");
                    pts.emplace_back(*t, *v);
                }
                c.valve = ValveSchedule::tabulated(tc, std::move(pts));
            } else {
                semantic("valve.law", "expected power or table, got '" + law + "'");
            }
        } catch (const std::invalid_argument& e) {
            semantic("valve", e.what());
        }
    } else if (r.has_section("valve")) {
        semantic("valve", "a dead-end terminal cannot have a valve schedule");
    } else if (r.has("boundary", "downstream_head")) {
        semantic("boundary.downstream_head", "a dead-end terminal has no downstream reservoir");
    }

    c.burst.mode = parse_mode(r.text("burst", "mode", "deterministic"), "burst.mode");
    c.burst.threshold_fraction = r.number_or("burst", "threshold_fraction", 0.8);
    c.burst.default_lambda = r.number_or("burst", "lambda", 0.001);
    c.burst.rng_seed = r.has("burst", "seed") ? r.integer("burst", "seed") : 1;
    if (const auto* e = r.find("burst", "forced"); e && !trim(e->value).empty()) {
        for (auto tok : split(e->value, ',')) {
            const auto parts = split(tok, '@');
            const auto node = parts.size() == 2 ? to_uint(parts[0]) : std::nullopt;
            const auto step = parts.size() == 2 ? to_uint(parts[1]) : std::nullopt;
            if (!node || !step) throw ScenarioError("burst.forced entries must be 'node@step'", e->line, "burst.forced");
            c.forced_bursts.push_back({*node, *step});
        }
    }

    if (r.has("run", "steps")) c.steps = r.integer("run", "steps");
    c.duration = r.number_or("run", "duration", 100.0);

    c.noise_variance = r.number_or("measurement", "variance", 0.04);
    c.noise_seed = r.has("measurement", "seed") ? r.integer("measurement", "seed") : 7;

    c.filter.initial_variance = r.number_or("filter", "initial_variance", 0.1);
    c.filter.head_variance = r.number_or("filter", "head_variance", 0.1);
    c.filter.flow_variance = r.number_or("filter", "flow_variance", 0.01);
    c.filter.leak_variance = r.number_or("filter", "leak_variance", 5e-5);
    c.filter.measurement_variance = r.number_or("filter", "measurement_variance", 0.001);

    c.output.timeseries = r.text("output", "timeseries");
    c.output.bursts = r.text("output", "bursts");
    c.output.manifest = r.text("output", "manifest");
    c.output.measurements = r.text("output", "measurements");
    c.output.estimates = r.text("output", "estimates");

    c.validate();
    return c;
}

std::string to_text(const ScenarioConfig& c) {
    const auto& net = c.network;
    const auto& pipe = net.pipes.front();
    std::ostringstream out;
    auto num = [](double v) { return format_number(v); };

    out << "[scenario]\nname = " << c.name << "\n\n";
    out << "[fluid]\n"
        << "density = " << num(net.fluid.density) << "\n"
        << "bulk_modulus = " << num(net.fluid.bulk_modulus) << "\n"
        << "gravity = " << num(net.fluid.gravity) << "\n\n";
    out << "[pipes]\n"
        << "count = " << net.pipes.size() << "\n"
        << "length = " << num(pipe.length) << "\n"
        << "diameter = " << num(pipe.diameter) << "\n"
        << "wall_thickness = " << num(pipe.wall_thickness) << "\n"
        << "friction_factor = " << num(pipe.friction_factor) << "\n"
        << "youngs_modulus = " << num(pipe.youngs_modulus) << "\n"
        << "anchoring_coefficient = " << num(pipe.anchoring_coefficient) << "\n"
        << "yield_stress = " << num(net.yield_stress) << "\n\n";
    out << "[nodes]\nelevations = ";
    for (std::size_t i = 0; i < net.nodes.size(); ++i) out << (i ? ", " : "") << num(net.nodes[i].elevation);
    out << "\nterminal = " << (net.has_valve() ? "valve" : "dead_end") << "\n\n";
    out << "[boundary]\nupstream_head = " << num(net.upstream_head) << "\n";
    if (net.downstream_head && net.has_valve()) out << "downstream_head = " << num(*net.downstream_head) << "\n";
    out << "entrance_loss = " << num(net.entrance_loss) << "\n"
        << "valve_discharge_coefficient = " << num(net.valve_discharge_coefficient) << "\n\n";
    if (c.valve) {
        out << "[valve]\nclosure_time = " << num(c.valve->closure_time()) << "\n";
        if (c.valve->law() == ValveSchedule::Law::power) {
            out << "law = power\nexponent = " << num(c.valve->exponent()) << "\n\n";
        } else {
            out << "law = table\ntable = ";
            const auto& t = c.valve->table();
            for (std::size_t i = 0; i < t.size(); ++i)
                out << (i ? ", " : "") << num(t[i].first) << ":" << num(t[i].second);
            out << "\n\n";
        }
    }
    out << "[burst]\nmode = " << mode_name(c.burst.mode) << "\n"
        << "threshold_fraction = " << num(c.burst.threshold_fraction) << "\n"
        << "lambda = " << num(c.burst.default_lambda) << "\n"
        << "seed = " << c.burst.rng_seed << "\n"
        << "forced = ";
    for (std::size_t i = 0; i < c.forced_bursts.size(); ++i)
        out << (i ? ", " : "") << c.forced_bursts[i].node << "@" << c.forced_bursts[i].step;
    out << "\n\n[run]\nduration = " << num(c.duration) << "\n";
    if (c.steps) out << "steps = " << *c.steps << "\n";
    out << "\n[measurement]\nvariance = " << num(c.noise_variance) << "\nseed = " << c.noise_seed << "\n\n";
    out << "[filter]\n"
        << "initial_variance = " << num(c.filter.initial_variance) << "\n"
        << "head_variance = " << num(c.filter.head_variance) << "\n"
        << "flow_variance = " << num(c.filter.flow_variance) << "\n"
        << "leak_variance = " << num(c.filter.leak_variance) << "\n"
        << "measurement_variance = " << num(c.filter.measurement_variance) << "\n";
    const auto& o = c.output;
    if (!o.timeseries.empty() || !o.bursts.empty() || !o.manifest.empty() || !o.measurements.empty() ||
        !o.estimates.empty()) {
        out << "\n[output]\n";
        if (!o.timeseries.empty()) out << "timeseries = " << o.timeseries << "\n";
        if (!o.bursts.empty()) out << "bursts = " << o.bursts << "\n";
        if (!o.manifest.empty()) out << "manifest = " << o.manifest << "\n";
        if (!o.measurements.empty()) out << "measurements = " << o.measurements << "\n";
        if (!o.estimates.empty()) out << "estimates = " << o.estimates << "\n";
    }
    return out.str();
}

std::string config_hash(const ScenarioConfig& config) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char ch : to_text(config)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// -------------------------------------------------------------
// Presets
// -------------------------------------------------------------

namespace {

// Horizontal line, valve closure (seven nodes, six 100 m pipes).
constexpr std::string_view kCaseA = R"(
[scenario]
name = paper-case-a
[fluid]
density = 1000
bulk_modulus = 2.1994e9
gravity = 9.8
[pipes]
count = 6
length = 100
diameter = 0.5
wall_thickness = 0.01905
friction_factor = 0.015
youngs_modulus = 4.1e11
anchoring_coefficient = 1
yield_stress = 8e6
[nodes]
elevations = 0, 0, 0, 0, 0, 0, 0
terminal = valve
[boundary]
upstream_head = 40
downstream_head = 30
entrance_loss = 0.5
valve_discharge_coefficient = 0.6
[valve]
closure_time = 20
law = power
exponent = 1.5
[burst]
mode = deterministic
threshold_fraction = 0.8
lambda = 0.001
seed = 1
[run]
duration = 100
[measurement]
variance = 0.04
seed = 7
)";

// Non-horizontal dead-end line, hydrostatic start.
constexpr std::string_view kCaseB = R"(
[scenario]
name = paper-case-b
[fluid]
density = 1000
bulk_modulus = 2.1994e9
gravity = 9.811
[pipes]
count = 5
length = 20
diameter = 0.5
wall_thickness = 0.01905
friction_factor = 0.015
youngs_modulus = 4.1e11
anchoring_coefficient = 1
yield_stress = 8e6
[nodes]
elevations = 20, 20, 30, 30, 0, 0
terminal = dead_end
[boundary]
upstream_head = 60
entrance_loss = 0.5
[burst]
mode = deterministic
threshold_fraction = 0.8
lambda = 0.001
seed = 1
[run]
duration = 20
[measurement]
variance = 0.04
seed = 7
)";

ScenarioConfig case_a_fictitious() {
    auto c = parse_scenario(kCaseA);
    c.name = "paper-case-a-fictitious";
    c.burst.mode = BurstMode::none;
    c.forced_bursts = {{5, 400}};
    return c;
}

ScenarioConfig case_b_table3() {
    auto c = parse_scenario(kCaseB);
    c.name = "paper-case-b-table3";
    for (auto& p : c.network.pipes) p.length = 100.0;
    c.network.upstream_head = 40.0;
    c.duration = 100.0;
    return c;
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"paper-case-a", "paper-case-a-fictitious", "paper-case-b", "paper-case-b-table3"};
}

std::optional<ScenarioConfig> find_preset(std::string_view name) {
    if (name == "paper-case-a") return parse_scenario(kCaseA);
    if (name == "paper-case-a-fictitious") return case_a_fictitious();
    if (name == "paper-case-b") return parse_scenario(kCaseB);
    if (name == "paper-case-b-table3") return case_b_table3();
    return std::nullopt;
}

ScenarioConfig load_scenario(const std::string& name_or_path) {
    if (auto p = find_preset(name_or_path)) return *p;
    std::ifstream in(name_or_path, std::ios::binary);
    if (!in) throw ScenarioError("'" + name_or_path + "' is neither a preset nor a readable file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

// -------------------------------------------------------------
// Runs
// -------------------------------------------------------------

std::vector<BoundaryInputs> schedule_inputs(const ScenarioConfig& config) {
    const auto grid = config.grid();
    const SolverState steady = steady_state(config.network);
    const auto ref = ValveReference::from_steady_state(config.network, steady);
    std::vector<BoundaryInputs> out;
    out.reserve(grid.steps + 1);
    for (std::size_t k = 0; k <= grid.steps; ++k)
        out.push_back(boundary_inputs_at(static_cast<double>(k) * grid.dt, config.network, config.schedule(), ref));
    return out;
}

RunArtifacts simulate(const ScenarioConfig& config, const ProbabilityLaw& law) {
    config.validate();
    const auto& net = config.network;
    const auto grid = config.grid();

    RunArtifacts run;
    run.dt = grid.dt;
    run.wave_speed = wave_speed(net.fluid, net.pipes.front());
    run.inputs = schedule_inputs(config);
    run.registry = BurstRegistry(net.node_count());
    run.states.reserve(grid.steps + 1);
    run.states.push_back(steady_state(net));

    UniformStream stream(config.burst.rng_seed);
    for (std::size_t k = 1; k <= grid.steps; ++k) {
        const auto lambdas = run.registry.lambdas();
        SolverState next = advance(run.states.back(), net, run.inputs[k], lambdas, grid.dt, ReverseFlowPolicy::reject);
        next.time = static_cast<double>(k) * grid.dt;

        for (const auto& f : config.forced_bursts) {
            if (f.step != k || run.registry.is_burst(f.node)) continue;
            run.registry.mark_burst(f.node, k, config.burst.default_lambda);
            const double h = pressure_head(net.nodes[f.node], next);
            const double stress = hoop_stress(h, net.fluid, stress_pipe(net, f.node));
            run.bursts.push_back({k, next.time, f.node, stress, 1.0, std::nullopt, BurstCause::forced});
        }
        auto events = evaluate_bursts(next, net, config.burst, run.registry, stream, k, law);
        run.bursts.insert(run.bursts.end(), events.begin(), events.end());
        run.states.push_back(std::move(next));
    }
    return run;
}

std::vector<ekf::Measurement> simulate_measurements(const std::vector<SolverState>& truth, double variance,
                                                    std::uint64_t seed) {
    if (!(variance >= 0.0)) throw std::invalid_argument("measurement variance must be >= 0");
    std::vector<ekf::Measurement> z;
    z.reserve(truth.size());
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> noise(0.0, variance > 0.0 ? std::sqrt(variance) : 1.0);
    for (const auto& s : truth) {
        ekf::Measurement m(s.head[0], s.head[s.head.size() - 1]);
        if (variance > 0.0) {
            m[0] += noise(engine);
            m[1] += noise(engine);
        }
        z.push_back(m);
    }
    return z;
}

std::vector<ekf::FilterStep> estimate(const ScenarioConfig& config, const std::vector<ekf::Measurement>& z) {
    const auto& net = config.network;
    const ekf::StateLayout layout(net.node_count());
    const auto& f = config.filter;
    const auto noise =
        ekf::NoiseConfig::block_diagonal(layout, f.head_variance, f.flow_variance, f.leak_variance,
                                         f.measurement_variance);
    auto inputs = schedule_inputs(config);
    if (inputs.size() < z.size())
        throw DimensionMismatchError("measurement series is longer than the scenario run");
    inputs.resize(z.size());
    return ekf::run_filter(z, inputs, ekf::FilterInit::from_steady_state(net, f.initial_variance), noise, net,
                           config.grid().dt);
}

std::vector<SolverState> estimate_states(const std::vector<ekf::FilterStep>& steps, const PipelineNetwork& network,
                                         double dt) {
    std::vector<SolverState> out;
    out.reserve(steps.size());
    for (std::size_t k = 0; k < steps.size(); ++k)
        out.push_back(ekf::unpack(steps[k].posterior, network, static_cast<double>(k) * dt));
    return out;
}

// -------------------------------------------------------------
// Files
// -------------------------------------------------------------

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
    return out;
}

std::vector<std::vector<double>> read_csv(const std::filesystem::path& path, std::vector<std::string>& header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    header.clear();
    for (auto tok : split(line, ',')) header.emplace_back(tok);

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<double> row;
        for (auto tok : split(line, ',')) {
            const auto v = to_double(tok);
            if (!v) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad number");
            row.push_back(*v);
        }
        if (row.size() != header.size())
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::vector<std::string> timeseries_header(std::size_t node_count) {
    std::vector<std::string> h{"time"};
    for (std::size_t n = 0; n < node_count; ++n) h.push_back("H" + std::to_string(n));
    for (std::size_t i = 0; i + 1 < node_count; ++i) {
        h.push_back("Q" + std::to_string(i) + "_1");
        h.push_back("Q" + std::to_string(i) + "_2");
    }
    for (std::size_t n = 1; n + 1 < node_count; ++n) h.push_back("QL" + std::to_string(n));
    return h;
}

void write_timeseries(const std::filesystem::path& path, const std::vector<SolverState>& states) {
    if (states.empty()) throw std::invalid_argument("no states to write");
    const std::size_t n = states.front().node_count();
    auto out = open_out(path);
    const auto header = timeseries_header(n);
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& s : states) {
        out << format_number(s.time);
        for (Eigen::Index k = 0; k < s.head.size(); ++k) out << "," << format_number(s.head[k]);
        for (Eigen::Index k = 0; k < s.flow_up.size(); ++k)
            out << "," << format_number(s.flow_up[k]) << "," << format_number(s.flow_down[k]);
        for (Eigen::Index k = 1; k + 1 < s.leak_rate.size(); ++k) out << "," << format_number(s.leak_rate[k]);
        out << "\n";
    }
    if (!out) throw std::system_error(errno, std::generic_category(), "write failed: " + path.string());
}

std::vector<SolverState> read_timeseries(const std::filesystem::path& path) {
    std::vector<std::string> header;
    const auto rows = read_csv(path, header);
    // 1 + N + 2(N-1) + (N-2) = 4N - 3 columns
    if (header.size() < 9 || (header.size() + 3) % 4 != 0)
        throw std::runtime_error(path.string() + ": column count does not describe a serial pipeline");
    const std::size_t n = (header.size() + 3) / 4;
    if (header != timeseries_header(n)) throw std::runtime_error(path.string() + ": unexpected header");

    std::vector<SolverState> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        SolverState s = SolverState::zeros(n);
        std::size_t c = 0;
        s.time = row[c++];
        for (std::size_t k = 0; k < n; ++k) s.head[static_cast<Eigen::Index>(k)] = row[c++];
        for (std::size_t k = 0; k + 1 < n; ++k) {
            s.flow_up[static_cast<Eigen::Index>(k)] = row[c++];
            s.flow_down[static_cast<Eigen::Index>(k)] = row[c++];
        }
        for (std::size_t k = 1; k + 1 < n; ++k) s.leak_rate[static_cast<Eigen::Index>(k)] = row[c++];
        out.push_back(std::move(s));
    }
    return out;
}

void write_measurements(const std::filesystem::path& path, const std::vector<ekf::Measurement>& z, double dt) {
    auto out = open_out(path);
    out << "time,z_upstream,z_downstream\n";
    for (std::size_t k = 0; k < z.size(); ++k)
        out << format_number(static_cast<double>(k) * dt) << "," << format_number(z[k][0]) << ","
            << format_number(z[k][1]) << "\n";
    if (!out) throw std::system_error(errno, std::generic_category(), "write failed: " + path.string());
}

std::vector<ekf::Measurement> read_measurements(const std::filesystem::path& path) {
    std::vector<std::string> header;
    const auto rows = read_csv(path, header);
    if (header != std::vector<std::string>{"time", "z_upstream", "z_downstream"})
        throw std::runtime_error(path.string() + ": unexpected measurement header");
    std::vector<ekf::Measurement> z;
    z.reserve(rows.size());
    for (const auto& r : rows) z.emplace_back(r[1], r[2]);
    return z;
}

void write_burst_log(const std::filesystem::path& path, const std::vector<BurstEvent>& events) {
    auto out = open_out(path);
    out << "step,time,node_index,node_label,cause,stress,probability,draw\n";
    for (const auto& e : events) {
        out << e.step << "," << format_number(e.time) << "," << e.node << "," << e.node + 1 << ","
            << (e.cause == BurstCause::forced ? "forced" : "stress") << "," << format_number(e.stress) << ","
            << format_number(e.probability) << "," << (e.draw ? format_number(*e.draw) : std::string{}) << "\n";
    }
    if (!out) throw std::system_error(errno, std::generic_category(), "write failed: " + path.string());
}

void write_manifest(const std::filesystem::path& path, const ScenarioConfig& config, const RunArtifacts& run) {
    auto out = open_out(path);
    out << to_text(config) << "\n[manifest]\n"
        << "version = " << kVersion << "\n"
        << "config_hash = " << config_hash(config) << "\n"
        << "wave_speed = " << format_number(run.wave_speed) << "\n"
        << "dt = " << format_number(run.dt) << "\n"
        << "steps = " << (run.states.empty() ? 0 : run.states.size() - 1) << "\n"
        << "mode = " << mode_name(config.burst.mode) << "\n"
        << "burst_seed = " << config.burst.rng_seed << "\n"
        << "noise_seed = " << config.noise_seed << "\n";
    if (!out) throw std::system_error(errno, std::generic_category(), "write failed: " + path.string());
}

// -------------------------------------------------------------
// Summaries
// -------------------------------------------------------------

double final_quarter_mean(const std::vector<double>& series) {
    if (series.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t start = series.size() - series.size() / 4;
    const std::size_t from = start == series.size() ? series.size() - 1 : start;
    const double sum = std::accumulate(series.begin() + static_cast<std::ptrdiff_t>(from), series.end(), 0.0);
    return sum / static_cast<double>(series.size() - from);
}

ComparisonSummary compare(const std::vector<SolverState>& truth, const std::vector<SolverState>& estimates) {
    if (truth.empty() || estimates.empty()) throw std::invalid_argument("compare: empty series");
    const std::size_t rows = std::min(truth.size(), estimates.size());
    const std::size_t n = truth.front().node_count();
    if (estimates.front().node_count() != n) throw DimensionMismatchError("compare: node counts differ");

    ComparisonSummary out;
    for (std::size_t node = 1; node + 1 < n; ++node) {
        std::vector<double> t, e;
        for (std::size_t k = 0; k < rows; ++k) {
            t.push_back(truth[k].leak_rate[static_cast<Eigen::Index>(node)]);
            e.push_back(estimates[k].leak_rate[static_cast<Eigen::Index>(node)]);
        }
        LeakComparison lc;
        lc.node = node;
        lc.truth = final_quarter_mean(t);
        lc.estimate = final_quarter_mean(e);
        lc.abs_error = std::abs(lc.estimate - lc.truth);
        lc.rel_error = lc.truth != 0.0 ? lc.abs_error / std::abs(lc.truth) : std::numeric_limits<double>::quiet_NaN();
        out.leaks.push_back(lc);
    }
    double su = 0.0, sd = 0.0;
    const auto last = static_cast<Eigen::Index>(n - 1);
    for (std::size_t k = 0; k < rows; ++k) {
        su += std::pow(truth[k].head[0] - estimates[k].head[0], 2);
        sd += std::pow(truth[k].head[last] - estimates[k].head[last], 2);
    }
    out.head_rmse_upstream = std::sqrt(su / static_cast<double>(rows));
    out.head_rmse_downstream = std::sqrt(sd / static_cast<double>(rows));
    return out;
}

}  // namespace surge
