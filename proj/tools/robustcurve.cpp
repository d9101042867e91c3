#include "robustcurve/breaks.hpp"
#include "robustcurve/combiner.hpp"
#include "robustcurve/core/config.hpp"
#include "robustcurve/core/csv.hpp"
#include "robustcurve/core/forecast_set.hpp"
#include "robustcurve/core/log.hpp"
#include "robustcurve/core/panel.hpp"
#include "robustcurve/core/synthetic.hpp"
#include "robustcurve/evaluation.hpp"
#include "robustcurve/fadns.hpp"
#include "robustcurve/forest.hpp"
#include "robustcurve/term_structure.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
namespace rc = robustcurve;
using nlohmann::json;

namespace {

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

std::string digest_hex(const EVP_MD* md, const std::string& data) {
    unsigned char buf[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), buf, &len, md, nullptr) != 1) {
        throw std::runtime_error("digest computation failed");
    }
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(buf[i]);
    return out.str();
}

std::string sha256(const std::string& data) { return digest_hex(EVP_sha256(), data); }

std::string file_sha256(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256(buf.str());
}

struct Options {
    std::string config;
    std::string yields;
    std::string indicators;
    std::string out = "out";
    std::string seeds;
    std::string horizons;
    int jobs = 1;
    std::vector<std::string> schemes;
    int k = 3;
    std::vector<double> maturities;
    std::uint64_t synth_seed = 1;
    int synth_periods = 200;
};

/// Collects outputs and stage timings for the manifest.
class Run {
public:
    Run(std::string command, const Options& opts) : command_(std::move(command)), opts_(opts) {
        fs::create_directories(opts_.out);
    }

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
        std::ostringstream buf;
        body(buf);
        const std::string text = buf.str();
        const fs::path path = fs::path(opts_.out) / name;
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        std::ofstream file(path, std::ios::binary);
        if (!file) throw std::runtime_error("cannot write " + path.string());
        file << text;
        if (!file) throw std::runtime_error("write failed for " + path.string());
        outputs_.push_back({{"path", name}, {"sha256", sha256(text)}});
    }

    template <typename F>
    auto stage(const std::string& name, F&& body) {
        const auto start = std::chrono::steady_clock::now();
        rc::core::log().info("stage {} started", name);
        if constexpr (std::is_void_v<decltype(body())>) {
            body();
            record(name, start);
        } else {
            auto value = body();
            record(name, start);
            return value;
        }
    }

    void finish(const rc::core::ExperimentConfig& cfg, const std::vector<std::string>& notes = {}) {
        json inputs = json::array();
        std::string identity = command_ + "\n" + cfg.to_text();
        for (const auto& path : {opts_.yields, opts_.indicators, opts_.config}) {
            if (path.empty()) continue;
            const std::string sum = file_sha256(path);
            inputs.push_back({{"path", path}, {"sha256", sum}});
            identity += path + ":" + sum + "\n";
        }
        identity += "k=" + std::to_string(opts_.k) + "\n";
        for (const auto& s : opts_.schemes) identity += "scheme=" + s + "\n";
        for (double m : opts_.maturities) identity += "maturity=" + rc::core::format_number(m) + "\n";
        if (command_ == "synth") {
            identity += "seed=" + std::to_string(opts_.synth_seed) + " t=" + std::to_string(opts_.synth_periods) + "\n";
        }
        json manifest;
        manifest["command"] = command_;
        manifest["run_id"] = digest_hex(EVP_sha1(), identity);
        manifest["config_path"] = opts_.config;
        manifest["config"] = cfg.to_text();
        manifest["inputs"] = inputs;
        manifest["output_dir"] = opts_.out;
        manifest["seeds"] = command_ == "synth" ? std::vector<std::uint64_t>{opts_.synth_seed} : cfg.seeds;
        manifest["timings_seconds"] = timings_;
        manifest["outputs"] = outputs_;
        manifest["notes"] = notes;
        std::ofstream file(fs::path(opts_.out) / "manifest.json", std::ios::binary);
        file << manifest.dump(2) << '\n';
    }

private:
    void record(const std::string& name, std::chrono::steady_clock::time_point start) {
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        timings_[name] = elapsed.count();
    }

    std::string command_;
    const Options& opts_;
    json outputs_ = json::array();
    json timings_ = json::object();
};

rc::core::ExperimentConfig load_config(const Options& opts) {
    rc::core::ExperimentConfig cfg = opts.config.empty() ? rc::core::ExperimentConfig{}
                                                         : rc::core::ExperimentConfig::load(opts.config);
    if (!opts.seeds.empty()) cfg.set("seeds", opts.seeds);
    if (!opts.horizons.empty()) cfg.set("horizons", opts.horizons);
    cfg.validate();
    return cfg;
}

rc::core::YieldPanel require_yields(const Options& opts) {
    if (opts.yields.empty()) throw UsageError("--yields is required");
    return rc::core::load_yield_panel(opts.yields);
}

rc::core::IndicatorPanel require_indicators(const Options& opts) {
    if (opts.indicators.empty()) throw UsageError("--indicators is required");
    return rc::core::load_indicator_panel(opts.indicators);
}

std::vector<double> selected_maturities(const Options& opts, const rc::core::YieldPanel& yields) {
    if (opts.maturities.empty()) return yields.maturities();
    for (double m : opts.maturities) {
        if (!yields.column_of(m)) {
            throw rc::core::ConfigError("maturity " + rc::core::format_number(m) + " is not a column of the yield panel");
        }
    }
    return opts.maturities;
}

rc::core::ForecastSet restrict_maturities(const rc::core::ForecastSet& set, const std::vector<double>& maturities) {
    rc::core::ForecastSet out;
    for (const auto& [key, value] : set.entries()) {
        if (std::find(maturities.begin(), maturities.end(), key.maturity) != maturities.end()) out.insert(key, value);
    }
    return out;
}

std::vector<rc::combiner::Scheme> selected_schemes(const Options& opts) {
    if (opts.schemes.empty()) return rc::combiner::all_schemes();
    std::vector<rc::combiner::Scheme> out;
    for (const auto& id : opts.schemes) {
        try {
            out.push_back(rc::combiner::parse_scheme(id));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    return out;
}

void write_table(Run& run, const rc::evaluation::RmsfeTable& table) {
    run.write("rmsfe_" + table.id + ".csv", [&](std::ostream& out) { rc::evaluation::write_rmsfe(table, out); });
}

void write_seed_tables(Run& run, const std::vector<rc::evaluation::RmsfeTable>& per_seed) {
    const auto summary = rc::evaluation::summarize_seeds(per_seed);
    write_table(run, summary.mean);
    if (per_seed.size() > 1) {
        auto lo = summary.min;
        lo.id += "_min";
        auto hi = summary.max;
        hi.id += "_max";
        write_table(run, lo);
        write_table(run, hi);
    }
}

int cmd_synth(const Options& opts) {
    Run run("synth", opts);
    rc::core::SyntheticSpec spec;
    spec.seed = opts.synth_seed;
    spec.periods = opts.synth_periods;
    const auto world = run.stage("simulate", [&] { return rc::core::generate_synthetic_world(spec); });
    run.write("yields.csv", [&](std::ostream& out) { rc::core::write_yield_panel(world.yields, out); });
    run.write("indicators.csv", [&](std::ostream& out) { rc::core::write_indicator_panel(world.indicators, out); });
    run.finish(rc::core::ExperimentConfig{});
    return 0;
}

int cmd_dns(const Options& opts) {
    const auto cfg = load_config(opts);
    const auto yields = require_yields(opts);
    Run run("dns", opts);
    const auto forecasts = run.stage("dns", [&] { return rc::term_structure::dns_rolling_forecast(yields, cfg, opts.jobs); });
    run.write("forecasts_dns.csv", [&](std::ostream& out) { rc::core::write_forecast_set(forecasts, out); });
    write_table(run, rc::evaluation::model_rmsfe(forecasts, yields, "DNS", cfg.horizons));
    run.finish(cfg);
    return 0;
}

void check_k(int k, const rc::core::ExperimentConfig& cfg) {
    if (k < 0 || k > cfg.pca_k_max) {
        throw rc::core::ConfigError("k = " + std::to_string(k) + " outside [0, " + std::to_string(cfg.pca_k_max) + "]");
    }
}

int cmd_fadns(const Options& opts) {
    const auto cfg = load_config(opts);
    check_k(opts.k, cfg);
    const auto yields = require_yields(opts);
    const auto indicators = require_indicators(opts);
    Run run("fadns", opts);
    const auto forecasts = run.stage(
        "fadns", [&] { return rc::fadns::fadns_rolling_forecast(yields, indicators, opts.k, cfg, opts.jobs); });
    const std::string id = "FADNS-" + std::to_string(opts.k);
    run.write("forecasts_fadns_" + std::to_string(opts.k) + ".csv",
              [&](std::ostream& out) { rc::core::write_forecast_set(forecasts, out); });
    write_table(run, rc::evaluation::model_rmsfe(forecasts, yields, id, cfg.horizons));
    run.finish(cfg);
    return 0;
}

/// RF forecasts per seed over the selected maturities.
std::vector<rc::core::ForecastSet> run_rf(Run& run, const rc::core::YieldPanel& yields,
                                          const rc::core::IndicatorPanel& indicators,
                                          const std::vector<double>& maturities, const rc::core::ExperimentConfig& cfg,
                                          int jobs) {
    return run.stage("rf", [&] {
        std::vector<rc::core::ForecastSet> per_seed(cfg.seeds.size());
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
            for (double tau : maturities) {
                per_seed[s].merge(rc::forest::rf_rolling_forecast(yields, indicators, tau, cfg, cfg.seeds[s], jobs));
            }
        }
        return per_seed;
    });
}

int cmd_rf(const Options& opts) {
    const auto cfg = load_config(opts);
    const auto yields = require_yields(opts);
    const auto indicators = require_indicators(opts);
    const auto maturities = selected_maturities(opts, yields);
    Run run("rf", opts);
    const auto per_seed = run_rf(run, yields, indicators, maturities, cfg, opts.jobs);
    std::vector<rc::evaluation::RmsfeTable> tables;
    for (std::size_t s = 0; s < per_seed.size(); ++s) {
        run.write("forecasts_rf_seed" + std::to_string(cfg.seeds[s]) + ".csv",
                  [&](std::ostream& out) { rc::core::write_forecast_set(per_seed[s], out); });
        auto table = rc::evaluation::model_rmsfe(per_seed[s], yields, "RF", cfg.horizons);
        table.seeds = {cfg.seeds[s]};
        tables.push_back(std::move(table));
    }
    write_seed_tables(run, tables);
    run.finish(cfg);
    return 0;
}

int cmd_combine(const Options& opts) {
    const auto schemes = selected_schemes(opts);
    const auto cfg = load_config(opts);
    check_k(opts.k, cfg);
    const auto yields = require_yields(opts);
    const auto indicators = require_indicators(opts);
    const auto maturities = selected_maturities(opts, yields);
    Run run("combine", opts);

    const auto dns = restrict_maturities(
        run.stage("dns", [&] { return rc::term_structure::dns_rolling_forecast(yields, cfg, opts.jobs); }), maturities);
    const auto fadns = restrict_maturities(
        run.stage("fadns", [&] { return rc::fadns::fadns_rolling_forecast(yields, indicators, opts.k, cfg, opts.jobs); }),
        maturities);
    const auto rf = run_rf(run, yields, indicators, maturities, cfg, opts.jobs);

    const std::string fadns_id = "FADNS-" + std::to_string(opts.k);
    write_table(run, rc::evaluation::model_rmsfe(dns, yields, "DNS", cfg.horizons));
    write_table(run, rc::evaluation::model_rmsfe(fadns, yields, fadns_id, cfg.horizons));

    std::vector<rc::evaluation::RmsfeTable> rf_tables;
    std::vector<std::vector<rc::evaluation::RmsfeTable>> scheme_tables(schemes.size());
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
        const std::uint64_t seed = cfg.seeds[s];
        auto rf_table = rc::evaluation::model_rmsfe(rf[s], yields, "RF", cfg.horizons);
        rf_table.seeds = {seed};
        rf_tables.push_back(std::move(rf_table));

        rc::core::ForecastSet all = dns;
        all.merge(fadns);
        all.merge(rf[s]);
        const auto result = run.stage("combine_seed" + std::to_string(seed),
                                      [&] { return rc::evaluation::backtest(all, yields, schemes, cfg, opts.jobs); });
        const std::string prefix = cfg.seeds.size() > 1 ? "seed_" + std::to_string(seed) + "/" : "";
        for (const auto& traj : result.trajectories) {
            const std::string suffix = rc::combiner::scheme_id(traj.scheme) + "_" +
                                       rc::evaluation::maturity_tag(traj.maturity) + "_" + std::to_string(traj.horizon) +
                                       ".csv";
            run.write(prefix + "weights_" + suffix, [&](std::ostream& out) { rc::evaluation::write_weights(traj, out); });
            run.write(prefix + "errors_" + suffix, [&](std::ostream& out) { rc::evaluation::write_errors(traj, out); });
        }
        for (std::size_t i = 0; i < schemes.size(); ++i) {
            auto table = result.scheme_tables[i];
            table.seeds = {seed};
            scheme_tables[i].push_back(std::move(table));
        }
    }
    write_seed_tables(run, rf_tables);
    for (const auto& tables : scheme_tables) write_seed_tables(run, tables);
    run.finish(cfg, {"FC-DRO-ES weights follow exp(+eta * (L - min L)) on the expected shortfall of raw errors",
                     "FC-DRO-MIX weights follow exp(-eta * (L - min L)) on the blended squared-error loss"});
    return 0;
}

int cmd_breaks(const Options& opts) {
    const auto cfg = load_config(opts);
    const auto yields = require_yields(opts);
    Run run("breaks", opts);
    const auto reports =
        run.stage("breaks", [&] { return rc::breaks::analyze_panel(yields, cfg.pelt_penalty, opts.jobs); });
    run.write("breaks.csv", [&](std::ostream& out) { rc::breaks::write_breaks(yields, reports, out); });
    run.write("cusum.csv", [&](std::ostream& out) { rc::breaks::write_cusum(reports, out); });
    run.finish(cfg);
    return 0;
}

int fail(const std::string& kind, const std::string& message, int code) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    Options opts;
    CLI::App app{"Yield-curve forecasting and forecast-combination backtests"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config, "Experiment config (key = value lines)");
        sub->add_option("--out", opts.out, "Output directory");
        sub->add_option("--jobs", opts.jobs, "Worker threads")->check(CLI::PositiveNumber);
    };
    auto add_data = [&](CLI::App* sub, bool indicators) {
        add_common(sub);
        sub->add_option("--yields", opts.yields, "Yield panel CSV");
        if (indicators) sub->add_option("--indicators", opts.indicators, "Indicator panel CSV");
        sub->add_option("--horizons", opts.horizons, "Comma-separated horizons in months");
    };

    auto* synth = app.add_subcommand("synth", "Simulate a synthetic yield and indicator panel");
    synth->add_option("--out", opts.out, "Output directory");
    synth->add_option("--seed", opts.synth_seed, "Simulation seed");
    synth->add_option("--t", opts.synth_periods, "Number of months")->check(CLI::Range(10, 100000));

    auto* dns = app.add_subcommand("dns", "Rolling dynamic Nelson-Siegel forecasts");
    add_data(dns, false);

    auto* fadns = app.add_subcommand("fadns", "Rolling factor-augmented forecasts");
    add_data(fadns, true);
    fadns->add_option("--k", opts.k, "Number of principal components");

    auto* rf = app.add_subcommand("rf", "Rolling random-forest direct forecasts");
    add_data(rf, true);
    rf->add_option("--seeds", opts.seeds, "Comma-separated RNG seeds");
    rf->add_option("--maturity", opts.maturities, "Maturities in months (repeatable)")->delimiter(',');

    auto* combine = app.add_subcommand("combine", "Run all base models and combination schemes");
    add_data(combine, true);
    combine->add_option("--seeds", opts.seeds, "Comma-separated RNG seeds");
    combine->add_option("--k", opts.k, "Number of principal components for FADNS");
    combine->add_option("--maturity", opts.maturities, "Maturities in months (repeatable)")->delimiter(',');
    combine->add_option("--scheme", opts.schemes, "Scheme ids (repeatable; default all)")->delimiter(',');

    auto* brk = app.add_subcommand("breaks", "CUSUM and PELT break detection per maturity");
    add_data(brk, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), 2);
    }

    try {
        if (*synth) return cmd_synth(opts);
        if (*dns) return cmd_dns(opts);
        if (*fadns) return cmd_fadns(opts);
        if (*rf) return cmd_rf(opts);
        if (*combine) return cmd_combine(opts);
        if (*brk) return cmd_breaks(opts);
    } catch (const UsageError& e) {
        return fail("usage", e.what(), 2);
    } catch (const rc::core::ConfigError& e) {
        return fail("config", e.what(), 3);
    } catch (const rc::core::IngestionError& e) {
        return fail("ingestion", std::string(e.what()) + " (line " + std::to_string(e.line()) + ", column " +
                                     e.column() + ")", 4);
    } catch (const std::exception& e) {
        return fail("runtime", e.what(), 1);
    }
    return 0;
}
