/*
================================================================================
 apmag_main.cpp — command-line driver
--------------------------------------------------------------------------------
 Subcommands
   simulate <scenario>      run a detection scenario end to end; emit the
                            trace bundle (true field, first measured trial,
                            average, matched-filter output, template) plus a
                            structured report
   sensitivity <scenario>   run the sensitivity estimators on generated
                            test-tone / noise-only trials
   detect <trace> --template <file>
                            matched-filter an arbitrary saved trace
   checks                   reversal suite + no-source detection subtest
   dump-builtin <name>      print a builtin scenario as a config file
   report <file>            re-render a saved report (text / json-like-tree)

 Exit codes: 0 success, 2 configuration error, 3 failed check.
================================================================================
*/
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "apmag/report.hpp"
#include "apmag/scenario.hpp"
#include "apmag/trace_io.hpp"

namespace {

using namespace apmag;

/// Builtin name, otherwise a config-file path.
Scenario load_scenario_arg(const std::string& arg) {
    for (const auto& name : builtin_scenario_names())
        if (name == arg) return builtin_scenario(arg);
    std::ifstream is(arg);
    if (!is) throw std::invalid_argument("cannot open scenario file: " + arg);
    return parse_scenario(is);
}

void save_report_json(const std::filesystem::path& path, const Report& rep) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << rep.dump(2) << '\n';
}

int cmd_simulate(const std::string& scenario_arg, const std::string& out_dir,
                 ReportFormat format) {
    const Scenario s = load_scenario_arg(scenario_arg);
    const ScenarioResult r = run_scenario(s);

    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    const std::string p = s.name + "_";
    save_trace((dir / (p + "true_field.txt")).string(), r.true_field, s.name + " true field");
    save_trace((dir / (p + "measured.txt")).string(), r.measured_volts,
               s.name + " measured (first trial)");
    save_trace((dir / (p + "averaged.txt")).string(), r.averaged, s.name + " averaged");
    save_trace((dir / (p + "filtered.txt")).string(), r.filtered,
               s.name + " matched-filter output");
    TimeTrace tpl_trace(r.tpl.sample_rate_hz, TraceUnit::tesla, r.tpl.samples.size());
    tpl_trace.samples = r.tpl.samples;
    save_trace((dir / (p + "template.txt")).string(), tpl_trace, s.name + " template");
    save_report_json(dir / (p + "report.json"), r.report);

    write_report(std::cout, r.report, format);
    return 0;
}

int cmd_sensitivity(const std::string& scenario_arg, const std::string& methods_csv,
                    std::size_t n_trials, double t_trial_s, const std::string& out_dir,
                    ReportFormat format) {
    const Scenario s = load_scenario_arg(scenario_arg);
    MethodSelection methods{false, false, false};
    for (char c : methods_csv) {
        if (c == '1') methods.method1 = true;
        else if (c == '2') methods.method2 = true;
        else if (c == '3') methods.method3 = true;
        else if (c != ',' && c != ' ')
            throw std::invalid_argument("--methods takes a list drawn from 1,2,3");
    }
    const SensitivityReport rep = run_sensitivity(s, methods, n_trials, t_trial_s);
    const Report tree = sensitivity_report_tree(rep);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        save_report_json(std::filesystem::path(out_dir) / (s.name + "_sensitivity.json"), tree);
    }
    write_report(std::cout, tree, format);
    return 0;
}

int cmd_detect(const std::string& trace_path, const std::string& template_path,
               ReportFormat format) {
    std::string trace_name;
    const TimeTrace x = load_trace(trace_path, &trace_name);
    const TimeTrace h_trace = load_trace(template_path);
    if (h_trace.size() == 0) throw std::invalid_argument("detect: empty template file");
    MatchedTemplate h;
    h.samples = h_trace.samples;
    h.sample_rate_hz = h_trace.sample_rate_hz;
    h.window_s = h_trace.duration();

    const TimeTrace y = matched_filter(x, h);
    std::size_t peak = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (std::fabs(y.samples[i]) > std::fabs(y.samples[peak])) peak = i;

    // Noise scale from the score trace away from the peak (two template
    // lengths of guard band on each side).
    const std::size_t guard = 2 * h.samples.size();
    double acc = 0.0, acc2 = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const std::size_t dist = i > peak ? i - peak : peak - i;
        if (dist <= guard) continue;
        acc += y.samples[i];
        acc2 += y.samples[i] * y.samples[i];
        ++m;
    }
    if (m < 16)
        throw std::invalid_argument("detect: trace too short to estimate the score noise");
    const double mu = acc / static_cast<double>(m);
    const double sigma = std::sqrt(std::max(0.0, acc2 / static_cast<double>(m) - mu * mu));
    if (!(sigma > 0.0)) throw std::invalid_argument("detect: degenerate (constant) score trace");
    const double score = std::fabs(y.samples[peak] - mu) / sigma;

    Report rep;
    rep["trace"] = trace_name;
    rep["template_samples"] = h.samples.size();
    rep["peak_score"] = y.samples[peak];
    rep["peak_time_s"] = static_cast<double>(peak) / y.sample_rate_hz;
    rep["score_sigma"] = sigma;
    rep["snr"] = score;
    rep["detected"] = score >= detection_threshold;
    write_report(std::cout, rep, format);
    return 0;
}

int cmd_checks(ReportFormat format) {
    const ChecksResult result = run_checks();
    write_report(std::cout, result.report, format);
    return result.all_passed ? 0 : 3;
}

int cmd_report(const std::string& path, ReportFormat format) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open report file: " + path);
    Report rep;
    try {
        rep = Report::parse(is);
    } catch (const std::exception& e) {
        throw std::invalid_argument("malformed report file: " + std::string(e.what()));
    }
    write_report(std::cout, rep, format);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"action-potential magnetometry: scenario simulator and analysis driver"};
    app.require_subcommand(1);

    std::string format_str = "text";
    const auto add_format = [&](CLI::App* cmd) {
        cmd->add_option("--format", format_str, "report format: text or json-like-tree")
            ->default_val("text");
    };

    auto* sim = app.add_subcommand("simulate", "run a detection scenario end to end");
    std::string sim_scenario;
    std::string sim_out = ".";
    sim->add_option("scenario", sim_scenario, "builtin scenario name or config file path")
        ->required();
    sim->add_option("--out", sim_out, "output directory for traces and report");
    add_format(sim);

    auto* sens = app.add_subcommand("sensitivity", "run the sensitivity estimators");
    std::string sens_scenario;
    std::string sens_methods = "1,2,3";
    std::string sens_out;
    std::size_t sens_trials = 150;
    double sens_t_trial = 1.0;
    sens->add_option("scenario", sens_scenario, "builtin scenario name or config file path")
        ->required();
    sens->add_option("--methods", sens_methods, "estimators to run (subset of 1,2,3)");
    sens->add_option("--trials", sens_trials, "number of trials per series");
    sens->add_option("--t-trial", sens_t_trial, "trial duration [s]");
    sens->add_option("--out", sens_out, "optional directory for the report file");
    add_format(sens);

    auto* det = app.add_subcommand("detect", "matched-filter a saved trace");
    std::string det_trace, det_template;
    det->add_option("trace", det_trace, "trace file to scan")->required();
    det->add_option("--template", det_template, "template trace file")->required();
    add_format(det);

    auto* chk = app.add_subcommand("checks", "run the systematic-check suite");
    add_format(chk);

    auto* dump = app.add_subcommand("dump-builtin", "print a builtin scenario config");
    std::string dump_name;
    dump->add_option("name", dump_name, "builtin scenario name")->required();

    auto* rep = app.add_subcommand("report", "re-render a saved report file");
    std::string rep_path;
    rep->add_option("file", rep_path, "report JSON file")->required();
    add_format(rep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2; // bad arguments are configuration errors
    }

    try {
        const ReportFormat format = report_format_from_string(format_str);
        if (sim->parsed()) return cmd_simulate(sim_scenario, sim_out, format);
        if (sens->parsed())
            return cmd_sensitivity(sens_scenario, sens_methods, sens_trials, sens_t_trial,
                                   sens_out, format);
        if (det->parsed()) return cmd_detect(det_trace, det_template, format);
        if (chk->parsed()) return cmd_checks(format);
        if (dump->parsed()) {
            std::cout << serialize_scenario(builtin_scenario(dump_name));
            return 0;
        }
        if (rep->parsed()) return cmd_report(rep_path, format);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
