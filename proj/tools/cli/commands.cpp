#include "cli/commands.hpp"

#include "physec/atomic_file.hpp"
#include "physec/auth.hpp"
#include "physec/baseline.hpp"
#include "physec/error.hpp"
#include "physec/eval.hpp"
#include "physec/gmm_io.hpp"
#include "physec/trace.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>

#ifndef PHYSEC_VERSION
#define PHYSEC_VERSION "0.0.0"
#endif

namespace physec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Operating points reported in every evaluation summary.
constexpr double kReportedPfa[] = {0.001, 0.01, 0.0583};
constexpr double kSnapshotPfa = 0.01;

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ExperimentConfig resolve_config(const std::optional<std::string>& path, const KeyValues& overrides) {
    KeyValues kv;
    if (path) kv = load_key_values(*path);
    for (const auto& [k, v] : overrides) kv[k] = v;
    return config_from_key_values(kv);
}

json manifest(const std::string& command, const ExperimentConfig* config, const std::string& started,
              const std::vector<fs::path>& outputs) {
    json paths = json::array();
    for (const auto& p : outputs) paths.push_back(p.string());
    json j = {{"tool_version", tool_version()},
              {"command", command},
              {"started", started},
              {"finished", utc_timestamp()},
              {"output_paths", std::move(paths)}};
    if (config) j["config"] = to_json(*config);
    return j;
}

fs::path manifest_path_for(const fs::path& output) {
    fs::path m = output;
    m += ".manifest.json";
    return m;
}

std::vector<DetectorKind> detectors_for(const std::string& name) {
    if (name == "gmm") return {DetectorKind::gmm};
    if (name == "mse") return {DetectorKind::mse};
    if (name == "both") return {DetectorKind::gmm, DetectorKind::mse};
    throw ConfigError("detector", "expected gmm, mse or both");
}

json operating_points(const RocCurve& curve) {
    json ops = json::object();
    for (double target : kReportedPfa) ops[format_double(target)] = to_json(operating_point(curve, target));
    return ops;
}

}  // namespace

std::string tool_version() { return PHYSEC_VERSION; }

void cmd_simulate(const SimulateArgs& args, std::ostream& log) {
    const std::string started = utc_timestamp();
    const ExperimentConfig config = resolve_config(args.config_path, args.overrides);
    if (args.out_trace_path.empty()) throw ConfigError("out", "output trace path is required");
    const fs::path out = args.out_trace_path;
    if (out.has_parent_path() && !fs::is_directory(out.parent_path()))
        throw IoError("output directory does not exist: " + out.parent_path().string());

    const MessageStream stream = build_stream(config);
    std::vector<MessageRecord> records;
    records.reserve(stream.training.size() + stream.test.size());
    records.insert(records.end(), stream.training.begin(), stream.training.end());
    records.insert(records.end(), stream.test.begin(), stream.test.end());

    std::ostringstream trace;
    write_trace(trace, records, trace_format_for(out));
    OutputBatch batch;
    batch.add(out, trace.str());
    const fs::path man = manifest_path_for(out);
    batch.add(man, manifest("simulate", &config, started, {out, man}).dump(2) + "\n");
    batch.commit();
    log << "wrote " << records.size() << " records (" << stream.training.size() << " training, "
        << stream.test.size() << " test) to " << out.string() << '\n';
}

void cmd_evaluate(const EvaluateArgs& args, std::ostream& log) {
    const std::string started = utc_timestamp();
    ExperimentConfig config = resolve_config(args.config_path, args.overrides);
    const auto detectors = detectors_for(args.detector);
    if (args.out_dir.empty()) throw ConfigError("out-dir", "output directory is required");
    if (fs::exists(args.out_dir) && !fs::is_directory(args.out_dir))
        throw IoError("output path exists and is not a directory: " + args.out_dir);

    const bool sweeping = !args.m_sweep.empty();
    std::vector<std::size_t> ms = sweeping ? args.m_sweep : std::vector<std::size_t>{config.m_subcarriers};

    MessageStream stream;
    std::string source;
    if (args.trace_path) {
        if (!fs::exists(*args.trace_path)) throw IoError("trace not found: " + *args.trace_path);
        stream = stream_from_records(load_trace(*args.trace_path, trace_format_for(*args.trace_path)));
        source = *args.trace_path;
        const std::size_t dim = stream.dim();
        for (std::size_t m : ms) {
            if (!sweeping && m != dim)
                throw ConfigError("m_subcarriers", "config expects " + std::to_string(m) + " gains per estimate, trace has " +
                                                       std::to_string(dim));
            if (sweeping) {
                if (m > dim || dim % m != 0)
                    throw ConfigError("m_sweep", std::to_string(m) + " does not evenly subsample the trace's " +
                                                     std::to_string(dim) + " gains");
            }
        }
    } else {
        ExperimentConfig full = config;
        if (sweeping) full.m_subcarriers = config.profile.active_carriers;
        for (std::size_t m : ms) subsample_carriers(full.m_subcarriers, m);
        stream = build_stream(full);
        source = "simulated";
    }

    OutputBatch batch;
    std::vector<fs::path> outputs;
    const fs::path dir = args.out_dir;
    json results = json::array();
    std::optional<double> auc_gmm;
    std::optional<double> auc_mse;

    fs::create_directories(dir);
    for (std::size_t m : ms) {
        ExperimentConfig cm = config;
        cm.m_subcarriers = m;
        const MessageStream sm = stream.dim() == m ? stream : subsample_stream(stream, m);
        const std::string suffix = sweeping ? "_M" + std::to_string(m) : "";
        for (DetectorKind kind : detectors) {
            ScoredStream base;
            const RocCurve curve = sweep_roc(sm, cm, kind, &base);
            const ConfusionCounts totals = count_at(base, kind == DetectorKind::gmm ? 0.0 : std::numeric_limits<double>::infinity());
            const fs::path roc = dir / ("roc_" + std::string(to_string(kind)) + suffix + ".csv");
            batch.add(roc, roc_csv(curve));
            outputs.push_back(roc);

            if (base.final_gmm) {
                const fs::path snap = dir / ("auth_state" + suffix + ".json");
                batch.add(snap, to_json(*base.final_gmm).dump(2) + "\n");
                outputs.push_back(snap);
            }
            if (base.final_mse) {
                // The scoring pass accepts everything; store the detector at the 1% operating point.
                MseDetector det = *base.final_mse;
                const double th = operating_point(curve, kSnapshotPfa).threshold;
                if (std::isfinite(th) && th >= 0.0) det.set_threshold(th);
                const fs::path snap = dir / ("mse_detector" + suffix + ".json");
                batch.add(snap, to_json(det).dump(2) + "\n");
                outputs.push_back(snap);
            }

            results.push_back({{"detector", to_string(kind)},
                               {"m_subcarriers", m},
                               {"auc", curve.auc},
                               {"bob_messages", totals.bob_total()},
                               {"eve_messages", totals.eve_total()},
                               {"roc_points", curve.points.size()},
                               {"roc_csv", roc.filename().string()},
                               {"operating_points", operating_points(curve)}});
            if (m == ms.back()) (kind == DetectorKind::gmm ? auc_gmm : auc_mse) = curve.auc;
            log << to_string(kind) << " M=" << m << " AUC=" << format_double(curve.auc) << '\n';
        }
    }

    json summary = {{"tool_version", tool_version()},
                    {"source", source},
                    {"config", to_json(config)},
                    {"results", std::move(results)}};
    if (auc_gmm && auc_mse)
        summary["comparison"] = {{"m_subcarriers", ms.back()},
                                 {"auc_gmm", *auc_gmm},
                                 {"auc_mse", *auc_mse},
                                 {"gmm_auc_at_least_mse", *auc_gmm >= *auc_mse}};
    const fs::path summary_path = dir / "summary.json";
    batch.add(summary_path, summary.dump(2) + "\n");
    outputs.push_back(summary_path);
    const fs::path man = dir / "manifest.json";
    outputs.push_back(man);
    batch.add(man, manifest("evaluate", &config, started, outputs).dump(2) + "\n");
    batch.commit();
}

void cmd_classify(const ClassifyArgs& args, std::ostream& log) {
    const json snapshot = read_json_file(args.snapshot_path);
    if (!fs::exists(args.trace_path)) throw IoError("trace not found: " + args.trace_path);

    std::optional<Authenticator> gmm;
    std::optional<MseDetector> mse;
    std::size_t dim = 0;
    if (snapshot.is_object() && snapshot.contains("reference")) {
        mse = mse_detector_from_json(snapshot);
        dim = mse->reference().size();
    } else {
        gmm = authenticator_from_json(snapshot);
        dim = gmm->dim();
    }

    const auto records = load_trace(args.trace_path, trace_format_for(args.trace_path));
    if (!records.empty() && records.front().estimate.size() != dim)
        throw ContractError("snapshot expects " + std::to_string(dim) + " gains per estimate, trace has " +
                            std::to_string(records.front().estimate.size()));

    std::ostringstream out;
    out << "msg_index,bob_posterior,verdict\n";
    std::size_t flagged = 0;
    for (const auto& r : records) {
        const AuthDecision d = gmm ? gmm->score(r.estimate) : mse->score(r.estimate);
        flagged += !d.accepted();
        out << r.msg_index << ',' << format_double(d.bob_posterior) << ',' << to_string(d.verdict) << '\n';
    }
    write_file_atomic(args.out_path, out.str());
    log << "classified " << records.size() << " messages, " << flagged << " flagged\n";
}

int exit_code_for_current_exception(std::ostream& err) {
    try {
        throw;
    } catch (const ConfigError& e) {
        err << "error: invalid configuration: " << e.what() << '\n';
        return kExitValidation;
    } catch (const ContractError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const FitError& e) {
        err << "error: fit failed: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const ParseError& e) {
        err << "error: parse error: " << e.what() << '\n';
        return kExitIo;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

namespace {

void add_config_flags(CLI::App* cmd, KeyValues& overrides) {
    for (const auto& key : config_keys()) {
        cmd->add_option_function<std::string>(
               "--" + key, [&overrides, key](const std::string& v) { overrides[key] = v; },
               "override config key '" + key + "'")
            ->group("Config overrides");
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Physical-layer transmitter authentication from OFDM channel estimates"};
    app.require_subcommand(1);

    SimulateArgs sim;
    std::string sim_config;
    auto* simulate = app.add_subcommand("simulate", "Generate a labeled Bob/Eve trace");
    simulate->add_option("--config", sim_config, "key = value experiment config");
    simulate->add_option("--out", sim.out_trace_path, "trace path (.csv or .jsonl)")->required();
    add_config_flags(simulate, sim.overrides);

    EvaluateArgs ev;
    std::string ev_config;
    std::string ev_trace;
    bool ev_simulate = false;
    auto* evaluate = app.add_subcommand("evaluate", "ROC sweeps for the GMM and MSE detectors");
    evaluate->add_option("--config", ev_config, "key = value experiment config");
    auto* trace_opt = evaluate->add_option("--trace", ev_trace, "recorded trace to evaluate");
    evaluate->add_flag("--simulate", ev_simulate, "simulate the stream from the config")->excludes(trace_opt);
    evaluate->add_option("--detector", ev.detector, "gmm, mse or both")
        ->check(CLI::IsMember({"gmm", "mse", "both"}));
    evaluate->add_option("--m-sweep", ev.m_sweep, "subcarrier counts to sweep, e.g. 3,6,12,24,48")->delimiter(',');
    evaluate->add_option("--out-dir", ev.out_dir, "output directory")->required();
    add_config_flags(evaluate, ev.overrides);

    ClassifyArgs cl;
    auto* classify = app.add_subcommand("classify", "Score a trace with a stored detector snapshot");
    classify->add_option("--snapshot", cl.snapshot_path, "auth_state.json or mse_detector.json")->required();
    classify->add_option("--trace", cl.trace_path, "trace to score")->required();
    classify->add_option("--out", cl.out_path, "per-message CSV output")->required();

    auto* version = app.add_subcommand("version", "Print the tool version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (version->parsed()) {
            out << "physec " << tool_version() << '\n';
        } else if (simulate->parsed()) {
            if (!sim_config.empty()) sim.config_path = sim_config;
            cmd_simulate(sim, out);
        } else if (evaluate->parsed()) {
            if (!ev_config.empty()) ev.config_path = ev_config;
            if (!ev_trace.empty()) ev.trace_path = ev_trace;
            cmd_evaluate(ev, out);
        } else if (classify->parsed()) {
            cmd_classify(cl, out);
        }
    } catch (...) {
        return exit_code_for_current_exception(err);
    }
    return kExitOk;
}

}  // namespace physec::cli
