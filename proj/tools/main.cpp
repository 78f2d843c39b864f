#include "CLI11.hpp"
#include "json.hpp"

#include "spikelds/compiler.hpp"
#include "spikelds/csvio.hpp"
#include "spikelds/kalman.hpp"
#include "spikelds/workbench.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace spikelds;

namespace {

struct CommonOpts {
    std::string config;
    std::string out = ".";
    std::uint64_t seed = 1;
    std::uint32_t m = 5, n = 5;
    double rho0 = 0.9;
    std::int64_t frames = 2400;
    std::uint32_t p = 21, ell = 25;
    double eta = 0.9;
    bool no_cancellation = false;
};

struct KalmanOpts {
    std::uint32_t trials = 8;
    std::int64_t frames = 400;
    std::string data;
    KinematicParams kp;
};

struct SweepOpts {
    std::string axis = "input-dim";
    std::vector<double> grid;
};

struct CompileOpts {
    std::string system = "lds";
    Eigen::MatrixXd w;
};

void add_common_flags(CLI::App* cmd, CommonOpts& o, bool with_system_dims)
{
    cmd->add_option("--config", o.config, "JSON config file; explicit flags win");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--p", o.p, "population size")->check(CLI::Range(1, 21));
    cmd->add_option("--ell", o.ell, "frame length in steps")->check(CLI::PositiveNumber);
    cmd->add_option("--eta", o.eta, "codec headroom")->check(CLI::Range(0.0, 1.0));
    cmd->add_flag("--no-cancellation", o.no_cancellation,
                  "run the doubled system without annihilation pairs");
    if (with_system_dims) {
        cmd->add_option("--m", o.m, "state dimension")->check(CLI::PositiveNumber);
        cmd->add_option("--n", o.n, "input dimension")->check(CLI::PositiveNumber);
        cmd->add_option("--rho0", o.rho0, "spectral radius of the generated dynamics");
        cmd->add_option("--frames", o.frames, "run length in frames")
            ->check(CLI::PositiveNumber);
    }
}

ordered_json load_config(const std::string& path, const std::set<std::string>& allowed)
{
    if (path.empty())
        return ordered_json::object();
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("cannot open config file: " + path);
    ordered_json j;
    try {
        j = ordered_json::parse(is);
    } catch (const std::exception& e) {
        throw std::runtime_error("config parse error: " + std::string(e.what()));
    }
    if (!j.is_object())
        throw std::runtime_error("config must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key))
            throw std::runtime_error("config: unknown key '" + key + "'");
    return j;
}

// config supplies a value only when the flag was not given on the command line
template <typename T>
void take(const ordered_json& j, const CLI::App* cmd, const char* flag, const char* key, T& out)
{
    if (j.contains(key) && cmd->count(flag) == 0)
        out = j.at(key).get<T>();
}

const std::set<std::string> kCommonKeys = {"m",   "n",   "rho0", "frames",      "seed",
                                           "p",   "ell", "eta",  "cancellation"};

void merge_common(const ordered_json& j, const CLI::App* cmd, CommonOpts& o)
{
    take(j, cmd, "--m", "m", o.m);
    take(j, cmd, "--n", "n", o.n);
    take(j, cmd, "--rho0", "rho0", o.rho0);
    take(j, cmd, "--frames", "frames", o.frames);
    take(j, cmd, "--seed", "seed", o.seed);
    take(j, cmd, "--p", "p", o.p);
    take(j, cmd, "--ell", "ell", o.ell);
    take(j, cmd, "--eta", "eta", o.eta);
    if (j.contains("cancellation") && cmd->count("--no-cancellation") == 0)
        o.no_cancellation = !j.at("cancellation").get<bool>();
}

std::ofstream open_out(const fs::path& p)
{
    std::ofstream os(p, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot write " + p.string());
    return os;
}

void write_text(const fs::path& p, const std::string& text)
{
    auto os = open_out(p);
    os << text << '\n';
}

ordered_json common_config_json(const CommonOpts& o, bool with_system_dims)
{
    ordered_json c;
    if (with_system_dims) {
        c["m"] = o.m;
        c["n"] = o.n;
        c["rho0"] = o.rho0;
        c["frames"] = o.frames;
    }
    c["seed"] = o.seed;
    c["p"] = o.p;
    c["ell"] = o.ell;
    c["eta"] = o.eta;
    c["cancellation"] = !o.no_cancellation;
    return c;
}

std::vector<std::string> numbered(const std::string& stem, std::uint32_t count)
{
    std::vector<std::string> v;
    for (std::uint32_t i = 0; i < count; ++i)
        v.push_back(stem + std::to_string(i));
    return v;
}

// --- validate-cov ------------------------------------------------------------

int cmd_validate_cov(const CommonOpts& o)
{
    const CodecConfig codec{o.ell, o.p, o.eta};
    GenParams gp;
    gp.m = o.m;
    gp.n = o.n;
    gp.rho0 = o.rho0;
    gp.T = o.frames;
    gp.seed = o.seed;
    gp.codec = codec;

    const LdsSpec spec = gen_random_lds(gp);
    const SpikingLds sys = build_spiking_lds(transform_lds(spec), codec, !o.no_cancellation);

    std::vector<OverflowEvent> overflow;
    const Eigen::MatrixXi decoded = run_spiking(sys, spec.inputs, true, &overflow);
    const Eigen::MatrixXd ref = simulate_reference(sys.a_realized, sys.b_realized, spec.inputs);
    const ResidualSeries res = residuals(decoded, ref, codec);
    const CovarianceComparison cmp =
        compare_covariance(res.normalized, sys.a_realized, o.m, o.n, codec);
    const StabilityReport stab = stability_check(sys.a_realized);

    fs::create_directories(o.out);
    const fs::path dir(o.out);

    {
        auto os = open_out(dir / "inputs.csv");
        std::vector<std::string> header = {"frame"};
        for (const auto& h : numbered("u", o.n))
            header.push_back(h);
        csv::write_row(os, header);
        for (Eigen::Index t = 0; t < spec.inputs.cols(); ++t) {
            std::vector<std::string> row = {std::to_string(t)};
            for (Eigen::Index i = 0; i < spec.inputs.rows(); ++i)
                row.push_back(std::to_string(spec.inputs(i, t)));
            csv::write_row(os, row);
        }
    }
    {
        auto os = open_out(dir / "states.csv");
        std::vector<std::string> header = {"frame"};
        for (const auto& h : numbered("x", o.m))
            header.push_back(h + "_spiking");
        for (const auto& h : numbered("x", o.m))
            header.push_back(h + "_reference");
        csv::write_row(os, header);
        for (Eigen::Index t = 0; t < decoded.cols(); ++t) {
            std::vector<std::string> row = {std::to_string(t)};
            for (Eigen::Index i = 0; i < decoded.rows(); ++i)
                row.push_back(std::to_string(decoded(i, t)));
            for (Eigen::Index i = 0; i < ref.rows(); ++i)
                row.push_back(csv::format_double(ref(i, t)));
            csv::write_row(os, row);
        }
    }
    {
        auto os = open_out(dir / "cov_sample.csv");
        csv::write_matrix(os, numbered("x", o.m), cmp.sample.transpose());
    }
    {
        auto os = open_out(dir / "cov_theory.csv");
        csv::write_matrix(os, numbered("x", o.m), cmp.theory.transpose());
    }
    {
        auto os = open_out(dir / "cov_compare.csv");
        csv::write_row(os, {"i", "j", "sample", "theory", "abs_diff"});
        for (Eigen::Index i = 0; i < cmp.sample.rows(); ++i)
            for (Eigen::Index j = 0; j < cmp.sample.cols(); ++j)
                csv::write_row(os, {std::to_string(i), std::to_string(j),
                                    csv::format_double(cmp.sample(i, j)),
                                    csv::format_double(cmp.theory(i, j)),
                                    csv::format_double(std::abs(cmp.sample(i, j) -
                                                                cmp.theory(i, j)))});
    }

    ordered_json summary;
    summary["command"] = "validate-cov";
    summary["config"] = common_config_json(o, true);
    ordered_json results;
    results["frob_rel"] = cmp.frob_rel;
    results["mse_sample"] = cmp.mse_sample;
    results["mse_theory"] = cmp.mse_theory;
    results["mse_rel"] = cmp.mse_rel;
    results["n_eff"] = cmp.n_eff;
    results["rho"] = stab.rho;
    results["rho_abs"] = stab.rho_abs;
    results["overflow_events"] = overflow.size();
    summary["results"] = std::move(results);
    write_text(dir / "summary.json", summary.dump(2));

    std::cout << "validate-cov: frob_rel " << cmp.frob_rel << ", mse_rel " << cmp.mse_rel
              << ", outputs in " << dir.string() << "\n";
    return 0;
}

// --- sweep -------------------------------------------------------------------

int cmd_sweep(const CommonOpts& o, const SweepOpts& so)
{
    SweepAxis axis;
    std::vector<double> grid = so.grid;
    if (so.axis == "input-dim") {
        axis = SweepAxis::InputDim;
        if (grid.empty())
            grid = {5, 14, 23, 32};
    } else if (so.axis == "recurrent-strength") {
        axis = SweepAxis::RecurrentStrength;
        if (grid.empty())
            for (int i = 0; i < 10; ++i)
                grid.push_back(4.9 + (16.1 - 4.9) * i / 9.0);
    } else if (so.axis == "frame-len") {
        axis = SweepAxis::FrameLen;
        if (grid.empty())
            grid = {12, 25, 50, 100};
    } else {
        throw std::runtime_error("unknown sweep axis: " + so.axis);
    }

    GenParams gp;
    gp.m = o.m;
    gp.n = o.n;
    gp.rho0 = o.rho0;
    gp.T = o.frames;
    gp.seed = o.seed;
    gp.codec = CodecConfig{o.ell, o.p, o.eta};

    const auto points = run_sweep(axis, grid, gp, !o.no_cancellation, true);

    fs::create_directories(o.out);
    const fs::path dir(o.out);
    {
        auto os = open_out(dir / "sweep.csv");
        csv::write_row(os, {"axis", "axis_value", "theory_mse", "sample_mse", "mse_rel",
                            "frob_rel", "rho", "strength", "n_eff", "overflow_events"});
        for (const SweepPoint& pt : points)
            csv::write_row(os, {so.axis, csv::format_double(pt.axis_value),
                                csv::format_double(pt.theory_mse),
                                csv::format_double(pt.sample_mse),
                                csv::format_double(pt.mse_rel),
                                csv::format_double(pt.frob_rel), csv::format_double(pt.rho),
                                csv::format_double(pt.strength), csv::format_double(pt.n_eff),
                                std::to_string(pt.overflow_events)});
    }

    ordered_json summary;
    summary["command"] = "sweep";
    summary["config"] = common_config_json(o, true);
    summary["config"]["axis"] = so.axis;
    summary["config"]["grid"] = grid;
    ordered_json arr = ordered_json::array();
    double worst = 0.0;
    for (const SweepPoint& pt : points) {
        ordered_json pj;
        pj["axis_value"] = pt.axis_value;
        pj["theory_mse"] = pt.theory_mse;
        pj["sample_mse"] = pt.sample_mse;
        pj["mse_rel"] = pt.mse_rel;
        pj["frob_rel"] = pt.frob_rel;
        pj["overflow_events"] = pt.overflow_events;
        arr.push_back(std::move(pj));
        worst = std::max(worst, pt.mse_rel);
    }
    summary["points"] = std::move(arr);
    summary["worst_mse_rel"] = worst;
    write_text(dir / "summary.json", summary.dump(2));

    std::cout << "sweep(" << so.axis << "): " << points.size() << " points, worst mse_rel "
              << worst << ", outputs in " << dir.string() << "\n";
    return 0;
}

// --- kalman ------------------------------------------------------------------

TrialSet load_trial_csv(const std::string& path, Eigen::Index state_dim)
{
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("cannot open dataset: " + path);
    const auto rows = csv::read(is);
    if (rows.size() < 2)
        throw std::runtime_error("dataset has no data rows");
    const auto& header = rows[0];
    if (header.empty() || header[0] != "time")
        throw std::runtime_error("dataset must start with a 'time' column");

    Eigen::Index ds = 0, dy = 0;
    for (std::size_t i = 1; i < header.size(); ++i) {
        if (header[i] == "s" + std::to_string(ds))
            ++ds;
        else if (header[i] == "y" + std::to_string(dy))
            ++dy;
        else
            throw std::runtime_error("unexpected dataset column '" + header[i] + "'");
    }
    if (ds != state_dim)
        throw std::runtime_error("dataset must carry " + std::to_string(state_dim) +
                                 " state columns");
    if (dy < 1)
        throw std::runtime_error("dataset has no measurement columns");

    const Eigen::Index T = static_cast<Eigen::Index>(rows.size()) - 1;
    TrialSet set;
    set.states.emplace_back(ds, T);
    set.meas.emplace_back(dy, T);
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto& row = rows[static_cast<std::size_t>(t) + 1];
        if (row.size() != header.size())
            throw std::runtime_error("dataset row " + std::to_string(t + 1) +
                                     " has the wrong width");
        for (Eigen::Index i = 0; i < ds; ++i)
            set.states[0](i, t) = std::stod(row[static_cast<std::size_t>(1 + i)]);
        for (Eigen::Index i = 0; i < dy; ++i)
            set.meas[0](i, t) = std::stod(row[static_cast<std::size_t>(1 + ds + i)]);
    }
    return set;
}

int cmd_kalman(const CommonOpts& o, const KalmanOpts& ko)
{
    const CodecConfig codec{o.ell, o.p, o.eta};
    KinematicParams kp = ko.kp;

    TrialSet data;
    if (!ko.data.empty()) {
        data = load_trial_csv(ko.data, 3);
        kp.n_meas = static_cast<std::uint32_t>(data.meas[0].rows());
    } else {
        const KfModel truth = make_kinematic_model(kp, o.seed);
        data = simulate_trials(truth, ko.trials, ko.frames, o.seed + 1);
    }
    const KfModel model = fit_kf_model(data, kp);

    fs::create_directories(o.out);
    const fs::path dir(o.out);

    auto corr_os = open_out(dir / "correlations.csv");
    csv::write_row(corr_os, {"trial", "dim", "kf", "sskf", "spiking"});

    std::ofstream recon_os;
    double min_spiking = 1.0, sum_spiking = 0.0;
    std::int64_t n_corr = 0, overflow_total = 0;

    for (std::size_t trial = 0; trial < data.meas.size(); ++trial) {
        const Eigen::MatrixXd& meas = data.meas[trial];
        const Eigen::MatrixXd& truth = data.states[trial];
        const Eigen::Index T = meas.cols();

        const SpikingSskfResult r = spiking_sskf(model, meas, codec, !o.no_cancellation, true);
        overflow_total += r.overflow_events;

        // full time-varying filter for reference
        Eigen::MatrixXd kf(3, T);
        KfState st{model.x0, model.p0};
        for (Eigen::Index t = 0; t < T; ++t) {
            st = kf_step(model, st, meas.col(t));
            kf.col(t) = st.x;
        }

        for (Eigen::Index dim = 0; dim < 2; ++dim) {
            const Eigen::VectorXd tr = truth.row(dim).transpose();
            const double c_kf = pearson(tr, kf.row(dim).transpose());
            const double c_sskf = pearson(tr, r.plain.row(dim).transpose());
            const double c_spk = pearson(tr, r.estimates.row(dim).transpose());
            csv::write_row(corr_os, {std::to_string(trial), std::to_string(dim),
                                     csv::format_double(c_kf), csv::format_double(c_sskf),
                                     csv::format_double(c_spk)});
            min_spiking = std::min(min_spiking, c_spk);
            sum_spiking += c_spk;
            ++n_corr;
        }

        if (trial == 0) {
            recon_os = open_out(dir / "recon.csv");
            csv::write_row(recon_os,
                           {"frame", "true_pos", "true_vel", "kf_pos", "kf_vel", "sskf_pos",
                            "sskf_vel", "spiking_pos", "spiking_vel"});
            for (Eigen::Index t = 0; t < T; ++t)
                csv::write_row(recon_os,
                               {std::to_string(t), csv::format_double(truth(0, t)),
                                csv::format_double(truth(1, t)), csv::format_double(kf(0, t)),
                                csv::format_double(kf(1, t)),
                                csv::format_double(r.plain(0, t)),
                                csv::format_double(r.plain(1, t)),
                                csv::format_double(r.estimates(0, t)),
                                csv::format_double(r.estimates(1, t))});
        }
    }

    ordered_json summary;
    summary["command"] = "kalman";
    summary["config"] = common_config_json(o, false);
    summary["config"]["trials"] = data.meas.size();
    summary["config"]["trial_frames"] = data.meas[0].cols();
    summary["config"]["data"] = ko.data;
    summary["config"]["dt"] = kp.dt;
    summary["config"]["n_meas"] = kp.n_meas;
    ordered_json results;
    results["fitted_vel_decay"] = model.phi(1, 1);
    results["fitted_q_vel"] = model.q(1, 1);
    results["mean_spiking_corr"] = sum_spiking / static_cast<double>(n_corr);
    results["min_spiking_corr"] = min_spiking;
    results["overflow_events"] = overflow_total;
    summary["results"] = std::move(results);
    write_text(dir / "summary.json", summary.dump(2));

    std::cout << "kalman: " << data.meas.size() << " trials, mean spiking correlation "
              << sum_spiking / static_cast<double>(n_corr) << ", outputs in " << dir.string()
              << "\n";
    return 0;
}

// --- compile -----------------------------------------------------------------

int cmd_compile(const CommonOpts& o, const CompileOpts& co)
{
    const CodecConfig codec{o.ell, o.p, o.eta};
    CircuitGraph graph;

    if (co.system == "relay") {
        graph.n_inputs = 1;
        graph.neurons.push_back({{1}, 1, 0});
        graph.routes.push_back({RouteSource::input(0), 0, 0, 0});
        graph.input_ports.push_back({"in", {0}});
        graph.outputs.push_back({"out", {0}});
        graph.population_of = {kNoPopulation};
        graph.validate();
    } else if (co.system == "matvec") {
        if (co.w.size() == 0)
            throw std::runtime_error("compile: system 'matvec' needs a 'w' matrix in the config");
        graph = build_matvec(co.w, codec).graph;
    } else if (co.system == "lds") {
        GenParams gp;
        gp.m = o.m;
        gp.n = o.n;
        gp.rho0 = o.rho0;
        gp.T = o.frames;
        gp.seed = o.seed;
        gp.codec = codec;
        const LdsSpec spec = gen_random_lds(gp);
        graph = build_spiking_lds(transform_lds(spec), codec, !o.no_cancellation).graph;
    } else {
        throw std::runtime_error("compile: unknown system '" + co.system + "'");
    }

    const CompiledNetwork net = compile(graph);

    fs::create_directories(o.out);
    const fs::path dir(o.out);
    write_text(dir / "cores.json", core_config_json(net));
    write_text(dir / "placement.json", placement_report_json(net));

    ordered_json summary;
    summary["command"] = "compile";
    summary["config"] = common_config_json(o, co.system == "lds");
    summary["config"]["system"] = co.system;
    ordered_json results;
    results["cores_used"] = net.cores.size();
    results["fragments"] = net.report.n_fragments;
    results["splitters"] = net.report.n_splitters;
    results["delay_relays"] = net.report.n_delay_relays;
    results["axons_used"] = net.report.axons_used;
    results["neurons_used"] = net.report.neurons_used;
    summary["results"] = std::move(results);
    write_text(dir / "summary.json", summary.dump(2));

    std::cout << "compile(" << co.system << "): " << net.cores.size() << " cores, "
              << net.report.n_fragments << " fragments, outputs in " << dir.string() << "\n";
    return 0;
}

void apply_thread_cap()
{
#ifdef _OPENMP
    if (const char* env = std::getenv("SPIKELDS_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1)
            omp_set_num_threads(v);
    }
#endif
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"spiking LDS workbench: simulate, analyze and compile integer "
                 "spiking systems"};
    app.require_subcommand(1);

    CommonOpts vc, sw, ka, cp;
    SweepOpts sweep_opts;
    KalmanOpts kalman_opts;
    CompileOpts compile_opts;

    CLI::App* c_vc = app.add_subcommand("validate-cov",
                                        "run a random system and compare residual "
                                        "covariance against the closed form");
    add_common_flags(c_vc, vc, true);

    CLI::App* c_sw = app.add_subcommand("sweep", "residual statistics along one swept axis");
    add_common_flags(c_sw, sw, true);
    c_sw->add_option("--axis", sweep_opts.axis, "input-dim | recurrent-strength | frame-len")
        ->check(CLI::IsMember({"input-dim", "recurrent-strength", "frame-len"}));
    c_sw->add_option("--grid", sweep_opts.grid, "sweep grid values")->delimiter(',');

    CLI::App* c_ka = app.add_subcommand("kalman",
                                        "steady-state filter demo: fit, filter, spike, "
                                        "correlate");
    add_common_flags(c_ka, ka, false);
    c_ka->add_option("--trials", kalman_opts.trials, "synthetic trials")
        ->check(CLI::PositiveNumber);
    c_ka->add_option("--trial-frames", kalman_opts.frames, "frames per trial")
        ->check(CLI::PositiveNumber);
    c_ka->add_option("--data", kalman_opts.data,
                     "trajectory CSV (time, s0..s2, y0..); replaces synthesis");

    CLI::App* c_cp = app.add_subcommand("compile", "lower a system onto crossbar cores");
    add_common_flags(c_cp, cp, true);
    c_cp->add_option("--system", compile_opts.system, "relay | matvec | lds")
        ->check(CLI::IsMember({"relay", "matvec", "lds"}));

    CLI11_PARSE(app, argc, argv);
    apply_thread_cap();

    try {
        if (c_vc->parsed()) {
            merge_common(load_config(vc.config, kCommonKeys), c_vc, vc);
            return cmd_validate_cov(vc);
        }
        if (c_sw->parsed()) {
            auto keys = kCommonKeys;
            keys.insert("axis");
            keys.insert("grid");
            const ordered_json j = load_config(sw.config, keys);
            merge_common(j, c_sw, sw);
            take(j, c_sw, "--axis", "axis", sweep_opts.axis);
            if (j.contains("grid") && c_sw->count("--grid") == 0)
                sweep_opts.grid = j.at("grid").get<std::vector<double>>();
            return cmd_sweep(sw, sweep_opts);
        }
        if (c_ka->parsed()) {
            std::set<std::string> keys = {"seed", "p",  "ell",          "eta",
                                          "cancellation", "trials", "trial_frames", "data",
                                          "dt",           "vel_decay", "q_vel", "n_meas",
                                          "meas_noise_var", "h_bias_scale"};
            const ordered_json j = load_config(ka.config, keys);
            merge_common(j, c_ka, ka);
            take(j, c_ka, "--trials", "trials", kalman_opts.trials);
            take(j, c_ka, "--trial-frames", "trial_frames", kalman_opts.frames);
            take(j, c_ka, "--data", "data", kalman_opts.data);
            if (j.contains("dt"))
                kalman_opts.kp.dt = j.at("dt").get<double>();
            if (j.contains("vel_decay"))
                kalman_opts.kp.vel_decay = j.at("vel_decay").get<double>();
            if (j.contains("q_vel"))
                kalman_opts.kp.q_vel = j.at("q_vel").get<double>();
            if (j.contains("n_meas"))
                kalman_opts.kp.n_meas = j.at("n_meas").get<std::uint32_t>();
            if (j.contains("meas_noise_var"))
                kalman_opts.kp.meas_noise_var = j.at("meas_noise_var").get<double>();
            if (j.contains("h_bias_scale"))
                kalman_opts.kp.h_bias_scale = j.at("h_bias_scale").get<double>();
            return cmd_kalman(ka, kalman_opts);
        }
        if (c_cp->parsed()) {
            auto keys = kCommonKeys;
            keys.insert("system");
            keys.insert("w");
            const ordered_json j = load_config(cp.config, keys);
            merge_common(j, c_cp, cp);
            take(j, c_cp, "--system", "system", compile_opts.system);
            if (j.contains("w")) {
                const auto& wj = j.at("w");
                if (!wj.is_array() || wj.empty() || !wj[0].is_array())
                    throw std::runtime_error("config: 'w' must be an array of rows");
                const Eigen::Index rows = static_cast<Eigen::Index>(wj.size());
                const Eigen::Index cols = static_cast<Eigen::Index>(wj[0].size());
                compile_opts.w.resize(rows, cols);
                for (Eigen::Index r = 0; r < rows; ++r) {
                    if (static_cast<Eigen::Index>(wj[r].size()) != cols)
                        throw std::runtime_error("config: 'w' rows differ in length");
                    for (Eigen::Index c = 0; c < cols; ++c)
                        compile_opts.w(r, c) = wj[r][c].get<double>();
                }
            }
            return cmd_compile(cp, compile_opts);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
