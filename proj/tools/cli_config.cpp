#include "cli_config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace ddspin::cli {

namespace {

// strict object view: every key must be consumed exactly once
class Strict {
  public:
    Strict(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object())
            throw std::invalid_argument("config: '" + path_ + "' must be an object");
    }

    bool has(const std::string& key) {
        return j_.contains(key);
    }

    const json& require(const std::string& key) {
        if (!j_.contains(key))
            throw std::invalid_argument("config: missing required key '" + join(key) + "'");
        seen_.insert(key);
        return j_.at(key);
    }

    const json* optional(const std::string& key) {
        if (!j_.contains(key)) return nullptr;
        seen_.insert(key);
        return &j_.at(key);
    }

    void finish() {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key()))
                throw std::invalid_argument("config: unknown key '" + join(it.key()) + "'");
        }
    }

    std::string join(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

  private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

double as_number(const json& j, const std::string& where) {
    if (!j.is_number())
        throw std::invalid_argument("config: '" + where + "' must be a number");
    return j.get<double>();
}

int as_int(const json& j, const std::string& where) {
    if (!j.is_number_integer())
        throw std::invalid_argument("config: '" + where + "' must be an integer");
    return j.get<int>();
}

std::string as_string(const json& j, const std::string& where) {
    if (!j.is_string())
        throw std::invalid_argument("config: '" + where + "' must be a string");
    return j.get<std::string>();
}

LatticeSpec parse_lattice(const json& j) {
    Strict s(j, "lattice");
    const std::string geom = as_string(s.require("geometry"), "lattice.geometry");
    LatticeSpec lat = LatticeSpec::chain(3);
    if (geom == "chain") {
        const int n = as_int(s.require("n"), "lattice.n");
        Boundary bc = Boundary::Periodic;
        if (const json* b = s.optional("boundary")) {
            const std::string bs = as_string(*b, "lattice.boundary");
            if (bs == "periodic")
                bc = Boundary::Periodic;
            else if (bs == "open")
                bc = Boundary::Open;
            else
                throw std::invalid_argument("config: lattice.boundary must be periodic or open");
        }
        lat = LatticeSpec::chain(n, bc);
    } else if (geom == "hypercubic") {
        const json& dims = s.require("dims");
        if (!dims.is_array() || dims.empty())
            throw std::invalid_argument("config: lattice.dims must be a non-empty array");
        std::vector<int> sizes;
        for (const auto& d : dims) sizes.push_back(as_int(d, "lattice.dims[]"));
        lat = LatticeSpec::hypercubic(sizes);
    } else if (geom == "fully_connected") {
        lat = LatticeSpec::fully_connected(as_int(s.require("n"), "lattice.n"));
    } else if (geom == "parallelogram") {
        const json& dims = s.require("dims");
        if (!dims.is_array() || dims.size() != 2)
            throw std::invalid_argument("config: parallelogram lattice.dims must have 2 entries");
        const int shear = s.has("shear") ? as_int(s.require("shear"), "lattice.shear") : 0;
        lat = LatticeSpec::parallelogram(as_int(dims[0], "lattice.dims[0]"),
                                         as_int(dims[1], "lattice.dims[1]"), shear);
    } else {
        throw std::invalid_argument("config: unknown lattice.geometry '" + geom + "'");
    }
    s.finish();
    return lat;
}

ModelParams parse_model(const json& j, const LatticeSpec& lat) {
    Strict s(j, "model");
    ModelParams p;
    const std::string kind = as_string(s.require("kind"), "model.kind");
    if (kind == "xy")
        p.kind = InteractionKind::XY;
    else if (kind == "ising")
        p.kind = InteractionKind::Ising;
    else
        throw std::invalid_argument("config: model.kind must be xy or ising");
    p.delta = as_number(s.require("delta"), "model.delta");
    p.omega = as_number(s.require("omega"), "model.omega");

    const bool has_j = s.has("coupling");
    const bool has_jz = s.has("coupling_z");
    if (has_j == has_jz)
        throw std::invalid_argument(
            "config: specify exactly one of model.coupling and model.coupling_z");
    if (has_j) {
        p.coupling = as_number(s.require("coupling"), "model.coupling");
    } else {
        // the couplings rescaled by the connectivity compare across lattices
        p.coupling =
            as_number(s.require("coupling_z"), "model.coupling_z") / lat.connectivity();
    }
    if (const json* g = s.optional("gamma")) p.gamma = as_number(*g, "model.gamma");
    s.finish();
    p.validate();
    return p;
}

void parse_solver(const json& j, SolverSettings& out) {
    Strict s(j, "solver");
    auto num = [&](const char* key, double& slot, bool positive = true) {
        if (const json* v = s.optional(key)) {
            slot = as_number(*v, std::string("solver.") + key);
            if (positive && slot <= 0)
                throw std::invalid_argument(std::string("config: solver.") + key +
                                            " must be positive");
        }
    };
    num("t_final", out.t_final);
    num("t_max", out.t_max);
    num("rtol", out.rtol);
    num("atol", out.atol);
    num("steady_tol", out.steady_tol);
    num("exact_tol", out.exact_tol);
    if (const json* v = s.optional("max_sites_exact"))
        out.max_sites_exact = as_int(*v, "solver.max_sites_exact");
    if (const json* v = s.optional("use_fc_reduced")) {
        if (!v->is_boolean())
            throw std::invalid_argument("config: solver.use_fc_reduced must be a boolean");
        out.use_fc_reduced = v->get<bool>();
    }
    if (const json* v = s.optional("with_spectrum")) {
        if (!v->is_boolean())
            throw std::invalid_argument("config: solver.with_spectrum must be a boolean");
        out.with_spectrum = v->get<bool>();
    }
    if (const json* v = s.optional("spectrum_count"))
        out.spectrum_count = as_int(*v, "solver.spectrum_count");
    s.finish();
}

void parse_fit(const json& j, SolverSettings& out) {
    Strict s(j, "fit");
    if (const json* v = s.optional("lambda_r_min"))
        out.corr_fit.r_min = as_int(*v, "fit.lambda_r_min");
    if (const json* v = s.optional("lambda_r_max_frac"))
        out.corr_fit.r_max_frac = as_number(*v, "fit.lambda_r_max_frac");
    if (const json* v = s.optional("lambda_noise_floor"))
        out.corr_fit.noise_floor = as_number(*v, "fit.lambda_noise_floor");
    if (const json* v = s.optional("lambda_min_points"))
        out.corr_fit.min_points = as_int(*v, "fit.lambda_min_points");
    if (const json* v = s.optional("kappa_window_frac"))
        out.relax_fit.window_frac = as_number(*v, "fit.kappa_window_frac");
    if (const json* v = s.optional("kappa_noise_floor"))
        out.relax_fit.noise_floor = as_number(*v, "fit.kappa_noise_floor");
    if (const json* v = s.optional("kappa_min_points"))
        out.relax_fit.min_points = as_int(*v, "fit.kappa_min_points");
    s.finish();
}

} // namespace

RunConfig parse_config(const json& doc) {
    Strict s(doc, "");
    RunConfig c;

    const std::string tier = as_string(s.require("tier"), "tier");
    if (tier == "mf")
        c.tier = SolverTier::MF;
    else if (tier == "mfqf")
        c.tier = SolverTier::MFQF;
    else if (tier == "exact")
        c.tier = SolverTier::Exact;
    else
        throw std::invalid_argument("config: tier must be mf, mfqf or exact");

    c.lattice = parse_lattice(s.require("lattice"));
    c.params = parse_model(s.require("model"), c.lattice);

    if (const json* sw = s.optional("sweep")) {
        Strict ss(*sw, "sweep");
        c.has_sweep = true;
        const std::string par = as_string(ss.require("parameter"), "sweep.parameter");
        if (par == "delta")
            c.parameter = SweepParameter::Delta;
        else if (par == "omega")
            c.parameter = SweepParameter::Omega;
        else if (par == "coupling")
            c.parameter = SweepParameter::Coupling;
        else
            throw std::invalid_argument("config: sweep.parameter must be delta, omega or coupling");
        c.sweep_start = as_number(ss.require("start"), "sweep.start");
        c.sweep_stop = as_number(ss.require("stop"), "sweep.stop");
        c.sweep_points = as_int(ss.require("points"), "sweep.points");
        if (c.sweep_points < 1)
            throw std::invalid_argument("config: sweep.points must be >= 1");
        if (const json* pr = ss.optional("protocol")) {
            const std::string ps = as_string(*pr, "sweep.protocol");
            if (ps == "cold")
                c.protocol = SweepProtocol::ColdStart;
            else if (ps == "forward")
                c.protocol = SweepProtocol::WarmForward;
            else if (ps == "backward")
                c.protocol = SweepProtocol::WarmBackward;
            else if (ps == "both")
                c.protocol = SweepProtocol::BothDirections;
            else
                throw std::invalid_argument(
                    "config: sweep.protocol must be cold, forward, backward or both");
        }
        ss.finish();
    }

    if (const json* run = s.optional("run")) {
        Strict rs(*run, "run");
        if (const json* v = rs.optional("t_final")) {
            c.run_t_final = as_number(*v, "run.t_final");
            if (c.run_t_final <= 0)
                throw std::invalid_argument("config: run.t_final must be positive");
        }
        if (const json* v = rs.optional("record_times")) {
            if (!v->is_array())
                throw std::invalid_argument("config: run.record_times must be an array");
            for (const auto& t : *v) c.record_times.push_back(as_number(t, "run.record_times[]"));
        }
        rs.finish();
    }

    if (const json* sv = s.optional("solver")) parse_solver(*sv, c.solver);
    if (const json* f = s.optional("fit")) parse_fit(*f, c.solver);

    if (const json* out = s.optional("output")) {
        Strict os(*out, "output");
        if (const json* v = os.optional("prefix")) c.prefix = as_string(*v, "output.prefix");
        os.finish();
    }

    s.finish();
    return c;
}

void apply_override(json& doc, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("override '" + spec + "' is not of the form key=value");
    const std::string path = spec.substr(0, eq);
    const std::string value = spec.substr(eq + 1);

    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value; // bare strings are allowed unquoted
    }

    json* node = &doc;
    size_t start = 0;
    while (true) {
        const size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw std::invalid_argument("override '" + spec + "' has an empty key");
        if (dot == std::string::npos) {
            (*node)[key] = parsed;
            break;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config parse error in '" + path + "': " + e.what());
    }
    for (const auto& ov : overrides) apply_override(doc, ov);
    return parse_config(doc);
}

SweepPlan RunConfig::to_plan(int threads) const {
    SweepPlan plan;
    plan.tier = tier;
    plan.params = params;
    plan.lattice = lattice;
    plan.parameter = parameter;
    plan.grid = make_grid(sweep_start, sweep_stop, sweep_points);
    plan.protocol = protocol;
    plan.solver = solver;
    plan.threads = threads;
    return plan;
}

json config_to_json(const RunConfig& c) {
    json j;
    j["tier"] = to_string(c.tier);
    json lat;
    switch (c.lattice.geometry()) {
        case Geometry::FullyConnected:
            lat["geometry"] = "fully_connected";
            lat["n"] = c.lattice.num_sites();
            break;
        case Geometry::Chain:
            lat["geometry"] = "chain";
            lat["n"] = c.lattice.num_sites();
            lat["boundary"] = c.lattice.boundary() == Boundary::Periodic ? "periodic" : "open";
            break;
        case Geometry::HypercubicPeriodic:
            lat["geometry"] = "hypercubic";
            lat["dims"] = c.lattice.sizes();
            break;
        case Geometry::Parallelogram2D:
            lat["geometry"] = "parallelogram";
            lat["dims"] = c.lattice.sizes();
            lat["shear"] = c.lattice.shear();
            break;
    }
    j["lattice"] = lat;
    j["model"] = {{"kind", to_string(c.params.kind)},
                  {"delta", c.params.delta},
                  {"omega", c.params.omega},
                  {"coupling", c.params.coupling},
                  {"gamma", c.params.gamma}};
    if (c.has_sweep) {
        j["sweep"] = {{"parameter", to_string(c.parameter)},
                      {"start", c.sweep_start},
                      {"stop", c.sweep_stop},
                      {"points", c.sweep_points},
                      {"protocol", to_string(c.protocol)}};
    }
    j["run"] = {{"t_final", c.run_t_final}, {"record_times", c.record_times}};
    j["solver"] = {{"t_final", c.solver.t_final},
                   {"t_max", c.solver.t_max},
                   {"rtol", c.solver.rtol},
                   {"atol", c.solver.atol},
                   {"steady_tol", c.solver.steady_tol},
                   {"exact_tol", c.solver.exact_tol},
                   {"max_sites_exact", c.solver.max_sites_exact},
                   {"use_fc_reduced", c.solver.use_fc_reduced},
                   {"with_spectrum", c.solver.with_spectrum},
                   {"spectrum_count", c.solver.spectrum_count}};
    j["fit"] = {{"lambda_r_min", c.solver.corr_fit.r_min},
                {"lambda_r_max_frac", c.solver.corr_fit.r_max_frac},
                {"lambda_noise_floor", c.solver.corr_fit.noise_floor},
                {"lambda_min_points", c.solver.corr_fit.min_points},
                {"kappa_window_frac", c.solver.relax_fit.window_frac},
                {"kappa_noise_floor", c.solver.relax_fit.noise_floor},
                {"kappa_min_points", c.solver.relax_fit.min_points}};
    if (!c.prefix.empty()) j["output"] = {{"prefix", c.prefix}};
    return j;
}

} // namespace ddspin::cli
