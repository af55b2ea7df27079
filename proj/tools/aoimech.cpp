// aoimech - command line front end for the fresh-data mechanism toolkit.
//
// Subcommands: mechanism, quantize, baseline, verify, simulate, experiment,
// closed-forms. Exit codes: 0 success, 1 validation error, 2 numerical
// failure, 3 a requested property verdict failed.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aoimech/baselines.hpp"
#include "aoimech/config.hpp"
#include "aoimech/eval.hpp"
#include "aoimech/mech_quantized.hpp"
#include "aoimech/mech_single.hpp"
#include "aoimech/verify_sim.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

void write_meta(std::ostream& os, const aoimech::RunConfig& cfg, std::uint64_t seed) {
    os << "# tool=aoimech version=" << kVersion << "\n";
    os << "# config_hash=" << hash_hex(cfg.config_hash) << " seed=" << seed << "\n";
}

nlohmann::json meta_json(const aoimech::RunConfig& cfg, std::uint64_t seed) {
    nlohmann::json m;
    m["tool"] = "aoimech";
    m["version"] = kVersion;
    m["config_hash"] = hash_hex(cfg.config_hash);
    m["seed"] = seed;
    return m;
}

std::vector<double> parse_costs(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            std::size_t used = 0;
            double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw aoimech::config_error("could not parse cost '" + tok + "'");
        }
    }
    if (out.empty()) throw aoimech::config_error("--costs must list at least one value");
    return out;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw aoimech::config_error("cannot open output file '" + path + "'");
    return out;
}

void emit(const std::string& path, const std::string& payload) {
    if (path.empty()) {
        std::cout << payload;
    } else {
        auto out = open_out(path);
        out << payload;
    }
}

// ---------------------------------------------------------------------------

int run_mechanism_single(const aoimech::RunConfig& cfg, int grid, const std::string& out_path) {
    if (cfg.sources.size() != 1)
        throw aoimech::config_error("mechanism single: config must have exactly one source");
    aoimech::SingleSourceMechanism mech(cfg.sources[0].dist, cfg.aoi, cfg.sources[0].f_max);
    const auto& d = mech.dist();
    std::ostringstream os;
    write_meta(os, cfg, cfg.seed);
    os << "c,f,h,p,x\n";
    for (int i = 0; i < grid; ++i) {
        double c = d.c_low() + (d.c_high() - d.c_low()) * i / (grid - 1);
        double f = mech.rate(c);
        double h = mech.payment_rate(c);
        os << fmt12(c) << ',' << fmt12(f) << ',' << fmt12(h) << ',';
        if (auto q = mech.price_schedule(c)) {
            os << fmt12(q->price) << ',' << fmt12(q->interarrival) << '\n';
        } else {
            os << "no-trade,no-trade\n"; // rate 0: no updates purchased
        }
    }
    emit(out_path, os.str());
    return 0;
}

int run_mechanism_multi(const aoimech::RunConfig& cfg, const std::vector<double>& costs,
                        const std::string& out_path) {
    auto profile = cfg.profile();
    aoimech::MultiSourceMechanism mech(profile, cfg.aoi);
    auto alloc = mech.allocation(costs);
    auto h = mech.payment_rates(costs);
    auto p = aoimech::per_update_prices(alloc, h);
    nlohmann::json j;
    j["meta"] = meta_json(cfg, cfg.seed);
    j["costs"] = costs;
    j["f"] = alloc.rates;
    j["pi"] = alloc.schedule_probs;
    j["x"] = alloc.interarrival;
    j["f_agg"] = alloc.aggregate;
    j["h"] = h;
    j["p"] = p;
    j["no_trade"] = alloc.no_trade();
    emit(out_path, j.dump(2) + "\n");
    return 0;
}

int run_quantize(const aoimech::RunConfig& cfg, double delta_q,
                 const std::vector<double>& costs_in, const std::string& out_path) {
    auto profile = cfg.profile();
    aoimech::QuantizedMechanism qm(profile, cfg.aoi, delta_q);
    std::vector<double> costs = costs_in;
    if (costs.empty()) {
        if (profile.size() > 1)
            throw aoimech::config_error(
                "quantize: --costs is required for multi-source configs (fixes the rivals' cells)");
        costs = {profile.source(0).dist.c_low()};
    }
    profile.require_costs(costs);

    std::ostringstream os;
    write_meta(os, cfg, cfg.seed);
    os << "# delta_q=" << fmt12(delta_q)
       << " quantizer=midpoint-on-absolute-grid, clamped into the support\n";
    os << "# loss_bound=" << fmt12(qm.loss_bound()) << "\n";
    os << "source,cell_lo,cell_hi,midpoint,f_q,h_q_at_midpoint\n";
    for (std::size_t i = 0; i < profile.size(); ++i) {
        auto probe = costs;
        for (const auto& cell : qm.cells(i)) {
            probe[i] = cell.mid;
            double f = qm.rate(i, probe);
            double h = qm.payment_rate(i, probe);
            os << i << ',' << fmt12(cell.lo) << ',' << fmt12(cell.hi) << ',' << fmt12(cell.mid)
               << ',' << fmt12(f) << ',' << fmt12(h) << '\n';
        }
    }
    emit(out_path, os.str());
    return 0;
}

int run_baseline(const aoimech::RunConfig& cfg, const std::string& kind,
                 const std::vector<double>& costs, const std::string& out_path) {
    auto profile = cfg.profile();
    aoimech::BaselineOutcome out;
    if (kind == "benchmark")
        out = aoimech::benchmark_mechanism(profile, costs, cfg.aoi);
    else if (kind == "complete")
        out = aoimech::complete_info_pricing(profile, costs, cfg.aoi);
    else
        throw aoimech::config_error("baseline: --kind must be benchmark or complete");
    nlohmann::json j;
    j["meta"] = meta_json(cfg, cfg.seed);
    j["kind"] = kind;
    j["costs"] = costs;
    j["f"] = out.alloc.rates;
    j["pi"] = out.alloc.schedule_probs;
    j["x"] = out.alloc.interarrival;
    j["h"] = out.payment_rates;
    j["p"] = aoimech::per_update_prices(out.alloc, out.payment_rates);
    j["destination_cost_rate"] = aoimech::destination_cost_rate(out, cfg.aoi);
    emit(out_path, j.dump(2) + "\n");
    return 0;
}

int run_verify(const aoimech::RunConfig& cfg, const std::string& mechanism,
               const std::string& out_path) {
    auto profile = cfg.profile();
    const int n_rep = cfg.deviation_report_points;
    std::vector<aoimech::DeviationReport> reports;

    if (profile.size() == 1) {
        aoimech::InterimRule rule;
        if (mechanism == "optimal") {
            aoimech::SingleSourceMechanism mech(cfg.sources[0].dist, cfg.aoi,
                                                cfg.sources[0].f_max);
            rule = aoimech::interim_single(mech, n_rep);
        } else if (mechanism == "quantized") {
            aoimech::QuantizedMechanism qm(profile, cfg.aoi, cfg.delta_q);
            rule = aoimech::interim_quantized_single(qm, n_rep);
        } else if (mechanism == "benchmark") {
            rule.id = "benchmark";
            const auto& d = profile.source(0).dist;
            rule.reports = aoimech::detail::uniform_grid(d.c_low(), d.c_high(), n_rep);
            for (double r : rule.reports) {
                auto out = aoimech::benchmark_mechanism(profile, {r}, cfg.aoi);
                rule.rate.push_back(out.alloc.rates[0]);
                rule.payment.push_back(out.payment_rates[0]);
            }
        } else if (mechanism == "naive") {
            rule = aoimech::interim_naive(
                aoimech::naive_counterpart(cfg.sources[0].dist, cfg.aoi), n_rep);
        } else {
            throw aoimech::config_error("verify: unknown mechanism '" + mechanism + "'");
        }
        reports.push_back(aoimech::deviation_search(rule, cfg.ic_tolerance));
    } else {
        if (mechanism == "naive")
            throw aoimech::config_error("verify: the naive mechanism is single-source only");
        for (std::size_t i = 0; i < profile.size(); ++i) {
            aoimech::InterimRule rule;
            std::uint64_t seed_i = aoimech::derive_seed(cfg.seed, i);
            if (mechanism == "optimal") {
                aoimech::MultiSourceMechanism mech(profile, cfg.aoi);
                rule = aoimech::interim_optimal_multi(mech, i, n_rep, 4096, seed_i);
            } else if (mechanism == "quantized") {
                aoimech::QuantizedMechanism qm(profile, cfg.aoi, cfg.delta_q);
                rule = aoimech::interim_quantized_multi(qm, i, n_rep, 4096, seed_i);
            } else if (mechanism == "benchmark") {
                rule = aoimech::interim_benchmark(profile, cfg.aoi, i, n_rep, 4096, seed_i);
            } else {
                throw aoimech::config_error("verify: unknown mechanism '" + mechanism + "'");
            }
            reports.push_back(aoimech::deviation_search(rule, cfg.ic_tolerance));
        }
    }

    bool ic_all = true, ir_all = true;
    nlohmann::json j;
    j["meta"] = meta_json(cfg, cfg.seed);
    j["mechanism"] = mechanism;
    j["tolerance"] = cfg.ic_tolerance;
    j["sources"] = nlohmann::json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        nlohmann::json s;
        s["source"] = i;
        s["ic_ok"] = r.ic_ok;
        s["ir_ok"] = r.ir_ok;
        s["max_gain"] = r.max_gain;
        s["max_gain_std_error"] = r.max_gain_std_error;
        s["best_deviation"] = r.best_deviation;
        s["min_truthful_payoff"] = r.min_truthful_payoff;
        s["payoff_at_top"] = r.payoff_at_top;
        j["sources"].push_back(s);
        ic_all = ic_all && r.ic_ok;
        ir_all = ir_all && r.ir_ok;
    }
    j["ic_ok"] = ic_all;
    j["ir_ok"] = ir_all;
    emit(out_path, j.dump(2) + "\n");
    return (ic_all && ir_all) ? 0 : 3;
}

int run_simulate(const aoimech::RunConfig& cfg, const std::vector<double>& costs,
                 const std::string& mechanism, std::size_t updates, std::uint64_t seed,
                 const std::string& out_path, const std::string& ages_path) {
    auto profile = cfg.profile();
    aoimech::MultiAllocation alloc;
    std::vector<double> h;
    if (mechanism == "optimal") {
        aoimech::MultiSourceMechanism mech(profile, cfg.aoi);
        alloc = mech.allocation(costs);
        h = mech.payment_rates(costs);
    } else if (mechanism == "quantized") {
        aoimech::QuantizedMechanism qm(profile, cfg.aoi, cfg.delta_q);
        alloc = qm.allocation(costs);
        h = qm.payment_rates(costs);
    } else if (mechanism == "benchmark") {
        auto out = aoimech::benchmark_mechanism(profile, costs, cfg.aoi);
        alloc = out.alloc;
        h = out.payment_rates;
    } else if (mechanism == "complete") {
        auto out = aoimech::complete_info_pricing(profile, costs, cfg.aoi);
        alloc = out.alloc;
        h = out.payment_rates;
    } else {
        throw aoimech::config_error("simulate: unknown mechanism '" + mechanism + "'");
    }

    auto prices = aoimech::per_update_prices(alloc, h);
    auto trace = aoimech::simulate(alloc, prices, costs, cfg.aoi, updates, seed);

    std::ostringstream os;
    write_meta(os, cfg, seed);
    os << "update,time,interarrival,source,payment\n";
    for (std::size_t k = 0; k < trace.updates.size(); ++k) {
        const auto& up = trace.updates[k];
        os << k + 1 << ',' << fmt12(up.time) << ',' << fmt12(up.interarrival) << ',' << up.source
           << ',' << fmt12(up.payment) << '\n';
    }
    emit(out_path, os.str());

    if (!ages_path.empty()) {
        std::ostringstream as;
        write_meta(as, cfg, seed);
        as << "time,age\n";
        for (auto [t, age] : trace.age_samples) as << fmt12(t) << ',' << fmt12(age) << '\n';
        emit(ages_path, as.str());
    }

    nlohmann::json j;
    j["meta"] = meta_json(cfg, seed);
    j["mechanism"] = mechanism;
    j["updates"] = trace.update_count;
    j["destination_cost_rate"] = trace.destination_cost_rate;
    j["source_payoff_rates"] = trace.source_payoff_rates;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int run_experiment(const std::string& name, const aoimech::RunConfig& cfg,
                   std::size_t mc_samples, const std::string& out_path) {
    aoimech::SweepOptions so;
    so.master_seed = cfg.seed;
    so.mc_samples = mc_samples ? mc_samples : cfg.mc_samples;
    auto rows = aoimech::run_sweep(name, so);
    std::ostringstream os;
    write_meta(os, cfg, so.master_seed);
    os << "experiment,seed,param_name,param_value,J_complete,J_optimal,J_quantized,J_benchmark,"
          "stderr\n";
    for (const auto& row : rows) {
        os << row.experiment << ',' << row.seed << ',' << row.param_name << ','
           << fmt12(row.param_value) << ',' << fmt12(row.j_complete) << ','
           << fmt12(row.j_optimal) << ',' << fmt12(row.j_quantized) << ','
           << fmt12(row.j_benchmark) << ',' << fmt12(row.std_error) << '\n';
        if (!row.se_ok)
            os << "# warning: row " << row.param_name << '=' << fmt12(row.param_value)
               << " std error exceeds 0.5% of J\n";
    }
    emit(out_path, os.str());
    return 0;
}

int run_closed_forms(const std::string& setting, double alpha, double c_low, double c_high) {
    aoimech::ClosedFormTable t;
    if (setting == "uniform")
        t = aoimech::closed_forms_uniform(alpha, c_low, c_high);
    else if (setting == "trunc_exp")
        t = aoimech::closed_forms_trunc_exp(alpha, c_high);
    else
        throw aoimech::config_error("closed-forms: --setting must be uniform or trunc_exp");
    std::cout << "# tool=aoimech version=" << kVersion << "\n";
    std::cout << "setting=" << t.setting << " alpha=" << fmt12(t.alpha)
              << " c_low=" << fmt12(t.c_low) << " c_high=" << fmt12(t.c_high) << "\n";
    std::cout << "J_benchmark            " << fmt12(t.j_benchmark) << "\n";
    std::cout << "J_complete             " << fmt12(t.j_complete) << "\n";
    std::cout << "J_complete_cross       " << fmt12(t.j_complete_cross) << "\n";
    std::cout << "J_optimal              " << fmt12(t.j_optimal) << "\n";
    std::cout << "J_optimal_cross        " << fmt12(t.j_optimal_cross) << "\n";
    std::cout << "ratio_JB_over_JC       " << fmt12(t.j_benchmark / t.j_complete) << "\n";
    std::cout << "ratio_Jopt_over_JC     " << fmt12(t.j_optimal / t.j_complete) << "\n";
    std::cout << "bound_JB_over_JC       " << fmt12(t.benchmark_ratio_bound) << "\n";
    std::cout << "bound_Jopt_over_JC     " << fmt12(t.optimal_ratio_bound) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"optimal and quantized mechanisms for buying fresh data"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, out_path, ages_path, costs_csv;
    std::string kind = "benchmark", mechanism = "optimal", setting = "uniform", name;
    int grid = 200;
    double delta_override = 0.0, alpha = 1.0, c_low = 0.0, c_high = 30.0;
    std::size_t updates = 100000, samples = 0;
    std::uint64_t seed_override = 0;
    bool seed_given = false;

    auto* mech_cmd = app.add_subcommand("mechanism", "evaluate the optimal mechanism");
    mech_cmd->require_subcommand(1);
    auto* mech_single = mech_cmd->add_subcommand("single", "rate/payment schedule tables");
    mech_single->add_option("--config", config_path, "JSON run config")->required();
    mech_single->add_option("--grid", grid, "number of tabulated costs");
    mech_single->add_option("--out", out_path, "output CSV (default stdout)");
    auto* mech_multi = mech_cmd->add_subcommand("multi", "one allocation at reported costs");
    mech_multi->add_option("--config", config_path, "JSON run config")->required();
    mech_multi->add_option("--costs", costs_csv, "comma-separated reported costs")->required();
    mech_multi->add_option("--out", out_path, "output JSON (default stdout)");

    auto* quant_cmd = app.add_subcommand("quantize", "build the quantized mechanism table");
    quant_cmd->add_option("--config", config_path, "JSON run config")->required();
    quant_cmd->add_option("--delta", delta_override, "quantization step (overrides config)");
    quant_cmd->add_option("--costs", costs_csv, "rivals' reports (multi-source tables)");
    quant_cmd->add_option("--out", out_path, "output CSV (default stdout)");

    auto* base_cmd = app.add_subcommand("baseline", "benchmark / complete-information outcome");
    base_cmd->add_option("--kind", kind, "benchmark|complete")->required();
    base_cmd->add_option("--config", config_path, "JSON run config")->required();
    base_cmd->add_option("--costs", costs_csv, "comma-separated reported costs")->required();
    base_cmd->add_option("--out", out_path, "output JSON (default stdout)");

    auto* verify_cmd = app.add_subcommand("verify", "deviation-search IC/IR certification");
    verify_cmd->add_option("--config", config_path, "JSON run config")->required();
    verify_cmd->add_option("--mechanism", mechanism, "optimal|quantized|benchmark|naive")
        ->required();
    verify_cmd->add_option("--out", out_path, "verdict JSON (default stdout)");

    auto* sim_cmd = app.add_subcommand("simulate", "discrete-event update simulation");
    sim_cmd->add_option("--config", config_path, "JSON run config")->required();
    sim_cmd->add_option("--costs", costs_csv, "true costs")->required();
    sim_cmd->add_option("--mechanism", mechanism, "optimal|quantized|benchmark|complete");
    sim_cmd->add_option("--updates", updates, "number of updates");
    sim_cmd->add_option("--seed", seed_override, "simulation seed")
        ->each([&](const std::string&) { seed_given = true; });
    sim_cmd->add_option("--out", out_path, "trace CSV (default stdout)");
    sim_cmd->add_option("--ages-out", ages_path, "sampled age sawtooth CSV");

    auto* exp_cmd = app.add_subcommand("experiment", "parameter sweeps behind the figures");
    exp_cmd->add_option("--name", name, "quantloss|fig5|fig6|fig7|fig8")->required();
    exp_cmd->add_option("--config", config_path, "JSON run config (seed/samples)");
    exp_cmd->add_option("--seed", seed_override, "master seed (overrides config)")
        ->each([&](const std::string&) { seed_given = true; });
    exp_cmd->add_option("--samples", samples, "Monte Carlo samples per row");
    exp_cmd->add_option("--out", out_path, "results CSV (default stdout)");

    auto* cf_cmd = app.add_subcommand("closed-forms", "paper-setting closed forms");
    cf_cmd->add_option("--setting", setting, "uniform|trunc_exp")->required();
    cf_cmd->add_option("--alpha", alpha, "age exponent");
    cf_cmd->add_option("--c-low", c_low, "support lower end (uniform)");
    cf_cmd->add_option("--c-high", c_high, "support upper end");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*cf_cmd) return run_closed_forms(setting, alpha, c_low, c_high);

        aoimech::RunConfig cfg;
        if (!config_path.empty()) {
            cfg = aoimech::load_run_config(config_path);
        } else if (*exp_cmd) {
            cfg.sources.push_back({aoimech::CostDistribution::uniform(5.0, 30.0), 1e9});
            cfg.config_hash = aoimech::fnv1a_hash("builtin");
        }
        if (seed_given) cfg.seed = seed_override;

        if (*mech_single) {
            if (grid < 2) throw aoimech::config_error("--grid needs at least 2 points");
            return run_mechanism_single(cfg, grid, out_path);
        }
        if (*mech_multi) return run_mechanism_multi(cfg, parse_costs(costs_csv), out_path);
        if (*quant_cmd) {
            double dq = delta_override > 0.0 ? delta_override : cfg.delta_q;
            std::vector<double> costs;
            if (!costs_csv.empty()) costs = parse_costs(costs_csv);
            return run_quantize(cfg, dq, costs, out_path);
        }
        if (*base_cmd) return run_baseline(cfg, kind, parse_costs(costs_csv), out_path);
        if (*verify_cmd) return run_verify(cfg, mechanism, out_path);
        if (*sim_cmd)
            return run_simulate(cfg, parse_costs(costs_csv), mechanism, updates,
                                seed_given ? seed_override : cfg.seed, out_path, ages_path);
        if (*exp_cmd) return run_experiment(name, cfg, samples, out_path);
        std::cerr << "no subcommand selected\n";
        return 1;
    } catch (const aoimech::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const aoimech::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
