#include "mpbuck/scenario_io.hpp"

#include "mpbuck/error.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mpbuck {

namespace {

constexpr double kMicro = 1e-6;
constexpr double kPerMicro = 1e6;

/// Strict view of one JSON object: every key must be consumed.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ParseError(label() + " must be a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const Json& raw(const std::string& key) {
        if (!j_.contains(key)) throw ParseError("missing required key '" + path(key) + "'");
        seen_.insert(key);
        return j_.at(key);
    }

    double number(const std::string& key, double to_si = 1.0) {
        const Json& v = raw(key);
        if (!v.is_number()) throw ParseError("key '" + path(key) + "' must be a number");
        return v.get<double>() * to_si;
    }

    /// `fallback` is in file units, like the stored value.
    double number_or(const std::string& key, double fallback, double to_si = 1.0) {
        return has(key) ? number(key, to_si) : fallback * to_si;
    }

    std::int64_t integer(const std::string& key) {
        const Json& v = raw(key);
        if (!v.is_number_integer()) throw ParseError("key '" + path(key) + "' must be an integer");
        return v.get<std::int64_t>();
    }

    std::int64_t integer_or(const std::string& key, std::int64_t fallback) { return has(key) ? integer(key) : fallback; }

    std::string string(const std::string& key) {
        const Json& v = raw(key);
        if (!v.is_string()) throw ParseError("key '" + path(key) + "' must be a string");
        return v.get<std::string>();
    }

    std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ParseError("unknown key '" + path(it.key()) + "'");
    }

private:
    std::string label() const { return where_.empty() ? "document" : "'" + where_ + "'"; }

    const Json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

/// Value in file units whose conversion `v * to_si` reproduces `si` exactly
/// when such a value exists nearby.
double to_file_units(double si, double to_si) {
    double v = si / to_si;
    if (v * to_si == si) return v;
    double up = v, down = v;
    for (int k = 0; k < 16; ++k) {
        up = std::nextafter(up, INFINITY);
        down = std::nextafter(down, -INFINITY);
        if (up * to_si == si) return up;
        if (down * to_si == si) return down;
    }
    return v;
}

std::size_t positive_count(ObjectReader& r, const std::string& key, std::int64_t fallback) {
    const std::int64_t v = r.integer_or(key, fallback);
    if (v < 0) throw ConfigError("'" + r.path(key) + "' must not be negative");
    return static_cast<std::size_t>(v);
}

std::vector<double> number_array(const Json& v, const std::string& where) {
    if (!v.is_array()) throw ParseError("key '" + where + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ParseError("key '" + where + "' must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

Json parse_text(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw IoError("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "'");
    }
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Scenario scenario_from_json(const Json& j) {
    Scenario s;
    ObjectReader top(j, "");

    {
        ObjectReader c(top.raw("converter"), "converter");
        const std::int64_t n = c.integer("n_phases");
        if (n < 1) throw ConfigError("converter.n_phases: invariant n_phases >= 1 violated (got " + std::to_string(n) + ")");
        s.params.n_phases = static_cast<std::size_t>(n);
        s.params.inductance = c.number("inductance_uH", kMicro);
        s.params.capacitance = c.number("capacitance_uF", kMicro);
        s.params.r_winding = c.number_or("r_winding_ohm", 0.0);
        s.params.r_esr = c.number_or("r_esr_ohm", 0.0);
        s.params.u_source = c.number("u_source_V");
        s.params.pwm_period = c.number("pwm_period_us", kMicro);
        c.finish();
    }
    {
        ObjectReader l(top.raw("load"), "load");
        const Json& segs = l.raw("segments");
        if (!segs.is_array()) throw ParseError("key 'load.segments' must be an array");
        std::vector<LoadSegment> segments;
        for (std::size_t k = 0; k < segs.size(); ++k) {
            ObjectReader sr(segs[k], "load.segments[" + std::to_string(k) + "]");
            LoadSegment seg;
            seg.start_time = sr.number_or("start_us", 0.0, kMicro);
            seg.resistance_start = sr.number("resistance_ohm");
            seg.ramp_rate = sr.number_or("ramp_ohm_per_us", 0.0, kPerMicro);
            sr.finish();
            segments.push_back(seg);
        }
        double r_min = 0.0;
        if (l.has("r_min_ohm")) {
            r_min = l.number("r_min_ohm");
        } else {
            r_min = segments.empty() ? 0.0 : segments.front().resistance_start;
            for (const auto& seg : segments) r_min = std::min(r_min, seg.resistance_start);
        }
        l.finish();
        s.profile = LoadProfile(std::move(segments), r_min);
    }
    {
        ObjectReader c(top.raw("controller"), "controller");
        s.gains.u_ref = c.number("u_ref_V");
        s.gains.k_p = c.number_or("k_p", 0.0);
        s.gains.k_i = c.number_or("k_i", 0.0);
        s.gains.k_d = c.number_or("k_d", 0.0);
        s.gains.k_dd = c.number_or("k_dd", 0.0);
        s.gains.t_d = c.number_or("t_d_us", 1.0, kMicro);
        s.gains.t_dd = c.number_or("t_dd_us", 1.0, kMicro);
        c.finish();
    }
    {
        ObjectReader m(top.raw("simulation"), "simulation");
        s.sim.t_end = m.number("t_end_us", kMicro);
        s.sim.steps_per_pwm_period = positive_count(m, "steps_per_pwm_period", 64);
        s.sim.record_decimation = positive_count(m, "record_decimation", 1);
        s.sim.balancer_filter_coefficient = m.number_or("balancer_filter_coefficient", 0.1);
        if (m.has("initial_state")) {
            const Json& init = m.raw("initial_state");
            if (init.is_string()) {
                const auto v = init.get<std::string>();
                if (v == "zero") s.sim.initial = InitialKind::zero;
                else if (v == "warm") s.sim.initial = InitialKind::warm;
                else throw ParseError("simulation.initial_state must be \"zero\", \"warm\" or an object");
            } else {
                ObjectReader is(init, "simulation.initial_state");
                s.sim.initial = InitialKind::explicit_;
                s.sim.initial_state.capacitor_voltage = is.number("u_c_V");
                s.sim.initial_state.phase_currents = number_array(is.raw("phase_currents_A"), is.path("phase_currents_A"));
                is.finish();
            }
        }
        if (m.has("second_derivative_source")) {
            const auto v = m.string("second_derivative_source");
            if (v == "model_based") s.sim.second_derivative_source = SecondDerivativeSource::model_based;
            else if (v == "finite_difference") s.sim.second_derivative_source = SecondDerivativeSource::finite_difference;
            else throw ParseError("simulation.second_derivative_source must be \"model_based\" or \"finite_difference\"");
        }
        if (m.has("balancing")) {
            const auto v = m.string("balancing");
            if (v == "off") s.sim.balancing = Balancing::off;
            else if (v == "arithmetic") s.sim.balancing = Balancing::arithmetic;
            else throw ParseError("simulation.balancing must be \"off\" or \"arithmetic\"");
        }
        m.finish();
    }
    {
        ObjectReader b(top.raw("band"), "band");
        s.band.u_min = b.number("u_min_V");
        s.band.u_max = b.number("u_max_V");
        s.band.epsilon = b.number_or("epsilon_V", 1e-6);
        b.finish();
    }
    if (top.has("sweep")) {
        ObjectReader w(top.raw("sweep"), "sweep");
        s.sweep_factors = number_array(w.raw("scale_factors"), "sweep.scale_factors");
        w.finish();
    }
    top.finish();
    s.validate();
    return s;
}

Json scenario_to_json(const Scenario& s) {
    Json j;
    j["converter"] = {
        {"n_phases", s.params.n_phases},
        {"inductance_uH", to_file_units(s.params.inductance, kMicro)},
        {"capacitance_uF", to_file_units(s.params.capacitance, kMicro)},
        {"r_winding_ohm", s.params.r_winding},
        {"r_esr_ohm", s.params.r_esr},
        {"u_source_V", s.params.u_source},
        {"pwm_period_us", to_file_units(s.params.pwm_period, kMicro)},
    };
    Json segs = Json::array();
    for (const auto& seg : s.profile.segments()) {
        segs.push_back({{"start_us", to_file_units(seg.start_time, kMicro)},
                        {"resistance_ohm", seg.resistance_start},
                        {"ramp_ohm_per_us", to_file_units(seg.ramp_rate, kPerMicro)}});
    }
    j["load"] = {{"r_min_ohm", s.profile.r_min()}, {"segments", segs}};
    j["controller"] = {
        {"u_ref_V", s.gains.u_ref},
        {"k_p", s.gains.k_p},
        {"k_i", s.gains.k_i},
        {"k_d", s.gains.k_d},
        {"k_dd", s.gains.k_dd},
        {"t_d_us", to_file_units(s.gains.t_d, kMicro)},
        {"t_dd_us", to_file_units(s.gains.t_dd, kMicro)},
    };
    Json sim = {
        {"t_end_us", to_file_units(s.sim.t_end, kMicro)},
        {"steps_per_pwm_period", s.sim.steps_per_pwm_period},
        {"record_decimation", s.sim.record_decimation},
    };
    switch (s.sim.initial) {
    case InitialKind::zero: sim["initial_state"] = "zero"; break;
    case InitialKind::warm: sim["initial_state"] = "warm"; break;
    case InitialKind::explicit_:
        sim["initial_state"] = {{"u_c_V", s.sim.initial_state.capacitor_voltage},
                                {"phase_currents_A", s.sim.initial_state.phase_currents}};
        break;
    }
    sim["second_derivative_source"] =
        s.sim.second_derivative_source == SecondDerivativeSource::model_based ? "model_based" : "finite_difference";
    sim["balancing"] = s.sim.balancing == Balancing::arithmetic ? "arithmetic" : "off";
    sim["balancer_filter_coefficient"] = s.sim.balancer_filter_coefficient;
    j["simulation"] = sim;
    j["band"] = {{"u_min_V", s.band.u_min}, {"u_max_V", s.band.u_max}, {"epsilon_V", s.band.epsilon}};
    j["sweep"] = {{"scale_factors", s.sweep_factors}};
    return j;
}

Scenario load_scenario(const std::filesystem::path& path) {
    return scenario_from_json(parse_text(read_file(path), path.string()));
}

TuneConfig tune_config_from_json(const Json& j) {
    TuneConfig t;
    ObjectReader r(j, "");
    t.pso.swarm_size = positive_count(r, "swarm_size", 30);
    t.pso.max_iterations = positive_count(r, "max_iterations", 100);
    t.pso.inertia = r.number_or("inertia", 0.729);
    t.pso.cognitive = r.number_or("cognitive", 1.49445);
    t.pso.social = r.number_or("social", 1.49445);
    t.pso.velocity_clamp_fraction = r.number_or("velocity_clamp_fraction", 0.2);
    t.pso.seed = static_cast<std::uint64_t>(r.integer_or("seed", 1));
    t.pso.threads = positive_count(r, "threads", 0);
    {
        ObjectReader b(r.raw("bounds"), "bounds");
        const std::array<std::pair<const char*, double>, 6> keys{{{"k_p", 1.0},
                                                                 {"k_d", 1.0},
                                                                 {"k_dd", 1.0},
                                                                 {"k_i", 1.0},
                                                                 {"t_d_us", kMicro},
                                                                 {"t_dd_us", kMicro}}};
        for (const auto& [key, to_si] : keys) {
            const auto pair = number_array(b.raw(key), b.path(key));
            if (pair.size() != 2) throw ParseError("key '" + b.path(key) + "' must be [min, max]");
            t.pso.x_min.push_back(pair[0] * to_si);
            t.pso.x_max.push_back(pair[1] * to_si);
        }
        b.finish();
    }
    if (r.has("freeze_t_d_us")) t.frozen_t_d = r.number("freeze_t_d_us", kMicro);
    r.finish();
    t.validate();
    return t;
}

TuneConfig load_tune_config(const std::filesystem::path& path) {
    return tune_config_from_json(parse_text(read_file(path), path.string()));
}

ControllerGains gains_from_json(const Json& j) {
    ObjectReader r(j, "");
    ControllerGains g;
    g.k_p = r.number("k_p");
    g.k_i = r.number("k_i");
    g.k_d = r.number("k_d");
    g.k_dd = r.number("k_dd");
    g.t_d = r.number("t_d");
    g.t_dd = r.number("t_dd");
    g.u_ref = r.number("u_ref");
    r.finish();
    g.validate();
    return g;
}

Json gains_to_json(const ControllerGains& g) {
    return {{"k_p", g.k_p}, {"k_i", g.k_i},   {"k_d", g.k_d},    {"k_dd", g.k_dd},
            {"t_d", g.t_d}, {"t_dd", g.t_dd}, {"u_ref", g.u_ref}};
}

ControllerGains load_gains(const std::filesystem::path& path) {
    return gains_from_json(parse_text(read_file(path), path.string()));
}

Json metrics_to_json(const SimMetrics& m) {
    return {{"u_min", m.u_min},
            {"u_max", m.u_max},
            {"error_stddev", m.error_stddev},
            {"outage", m.outage},
            {"settled", m.settled},
            {"phase_current_spread_final", m.phase_current_spread_final},
            {"diverged", m.diverged}};
}

Json stability_to_json(const StabilityReport& r, const ReducedModel& model, double r_load) {
    return {{"r_load", r_load},
            {"b1", model.b1},
            {"g1", model.g1},
            {"coupling", model.coupling},
            {"g_diag", model.g_diag},
            {"r_factor", model.r_factor},
            {"n_f", model.n_f},
            {"trace", r.trace},
            {"determinant", r.determinant},
            {"poly_linear_coefficient", model.b1 + model.g_diag},
            {"poly_constant_coefficient", r.determinant},
            {"routh_hurwitz_stable", r.routh_hurwitz_stable},
            {"eigenvalue_1_re", r.eigenvalue_1.real()},
            {"eigenvalue_1_im", r.eigenvalue_1.imag()},
            {"eigenvalue_2_re", r.eigenvalue_2.real()},
            {"eigenvalue_2_im", r.eigenvalue_2.imag()},
            {"eigen_stable", r.eigen_stable},
            {"agreement", r.agreement}};
}

namespace {

// shortest plain-decimal text that reads back to the same double
struct CsvWriter {
    std::ostringstream out;
    CsvWriter& field(double v, bool first = false) {
        if (!first) out << ',';
        char buf[512];
        const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
        out.write(buf, r.ptr - buf);
        return *this;
    }
};

}  // namespace

std::string trace_to_csv(const SimTrace& t) {
    CsvWriter w;
    w.out << trace_csv_header(t.n_phases) << '\n';
    for (std::size_t s = 0; s < t.size(); ++s) {
        w.field(t.times[s], true).field(t.u_o[s]).field(t.u_c[s]);
        for (std::size_t j = 0; j < t.n_phases; ++j) w.field(t.current(s, j));
        w.field(t.duty_total[s]);
        for (std::size_t j = 0; j < t.n_phases; ++j) w.field(t.duty(s, j));
        w.field(t.r_load[s]).field(t.error[s]);
        w.out << '\n';
    }
    return w.out.str();
}

std::string convergence_to_csv(const TuneResult& r) {
    CsvWriter w;
    w.out << "iteration,best_value";
    for (const char* name : kGainNames) w.out << ',' << name;
    w.out << '\n';
    for (std::size_t i = 0; i < r.history.size(); ++i) {
        w.out << i;
        w.field(r.history[i]);
        for (double g : r.history_gains[i]) w.field(g);
        w.out << '\n';
    }
    return w.out.str();
}

std::string sweep_to_csv(const std::vector<SweepEntry>& entries) {
    CsvWriter w;
    w.out << "variant,scale,u_min_V,u_max_V,error_stddev_V,outage_V,settled,diverged\n";
    for (const auto& e : entries) {
        w.out << to_string(e.kind);
        w.field(e.factor).field(e.metrics.u_min).field(e.metrics.u_max).field(e.metrics.error_stddev).field(e.metrics.outage);
        w.out << ',' << (e.metrics.settled ? 1 : 0) << ',' << (e.metrics.diverged ? 1 : 0) << '\n';
    }
    return w.out.str();
}

std::string gnuplot_script(std::size_t n_phases) {
    std::ostringstream g;
    g << "set datafile separator ','\n"
         "set key autotitle columnhead\n"
         "set multiplot layout 3,1\n"
         "set ylabel 'V'\n"
         "plot 'trace.csv' using 1:2 with lines, '' using 1:3 with lines\n"
         "set ylabel 'A'\n"
         "plot ";
    for (std::size_t j = 0; j < n_phases; ++j) g << (j ? ", " : "'trace.csv'") << " using 1:" << 4 + j << " with lines";
    g << "\nset ylabel 'duty'\n"
         "plot 'trace.csv' using 1:"
      << 4 + n_phases << " with steps\n"
                         "unset multiplot\n";
    return g.str();
}

}  // namespace mpbuck
