// Scenario layer: builtin catalogue, config round-trips and diagnostics,
// validation rules, and the end-to-end runners.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "apmag/scenario.hpp"

using namespace apmag;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

TEST_CASE("builtin catalogue serializes and parses losslessly", "[scenario]") {
    const auto names = builtin_scenario_names();
    REQUIRE(names.size() == 3);
    REQUIRE(std::find(names.begin(), names.end(), "worm_excised") != names.end());
    REQUIRE(std::find(names.begin(), names.end(), "worm_whole") != names.end());
    REQUIRE(std::find(names.begin(), names.end(), "purkinje_r2um") != names.end());

    for (const auto& name : names) {
        const Scenario s = builtin_scenario(name);
        REQUIRE_NOTHROW(s.validate());
        const std::string text = serialize_scenario(s);
        const Scenario back = parse_scenario_text(text);
        // %.17g round-trips doubles exactly: serializing again is a no-op.
        REQUIRE(serialize_scenario(back) == text);
        REQUIRE(back.name == s.name);
        REQUIRE(back.axon.rho == s.axon.rho);
        REQUIRE(back.chain.settings.noise_scale == s.chain.settings.noise_scale);
        REQUIRE(back.seed == s.seed);
    }
    REQUIRE_THROWS_AS(builtin_scenario("nope"), std::invalid_argument);
}

TEST_CASE("scenario validation enforces species and epoch limits", "[scenario]") {
    Scenario s = scenario_worm_excised();
    REQUIRE_NOTHROW(s.validate());

    Scenario fast = s;
    fast.f_stim_hz = 2.0; // the worm preparation cannot follow 2 Hz
    REQUIRE_THROWS_AS(fast.validate(), std::invalid_argument);
    fast.species = "squid";
    REQUIRE_NOTHROW(fast.validate());

    Scenario crowded = s;
    crowded.ap.duration = 3.0; // 0.4 Hz stimulation: epochs would overlap
    REQUIRE_THROWS_AS(crowded.validate(), std::invalid_argument);

    Scenario none = s;
    none.n_avg = 0;
    REQUIRE_THROWS_AS(none.validate(), std::invalid_argument);
    none = s;
    none.n_spins = 0.0;
    REQUIRE_THROWS_AS(none.validate(), std::invalid_argument);
}

TEST_CASE("analysis windows are ordered and disjoint for the builtins", "[scenario]") {
    for (const auto& name : builtin_scenario_names()) {
        const Scenario s = builtin_scenario(name);
        const auto sig = s.signal_window();
        const auto quiet = s.quiet_window();
        INFO(name);
        REQUIRE(sig.first >= 0.0);
        REQUIRE(sig.first < sig.second);
        REQUIRE(sig.second <= quiet.first);
        REQUIRE(quiet.first < quiet.second);
        REQUIRE(quiet.second <= s.ap.duration);
    }
}

TEST_CASE("config parser reports the offending line", "[scenario]") {
    REQUIRE_THROWS_WITH(parse_scenario_text("foo=1\n"), ContainsSubstring("line 1"));
    REQUIRE_THROWS_WITH(parse_scenario_text("[scenario\n"), ContainsSubstring("line 1"));
    REQUIRE_THROWS_WITH(parse_scenario_text("[]\n"), ContainsSubstring("line 1"));
    REQUIRE_THROWS_WITH(parse_scenario_text("[scenario]\nn_avg=2\nn_avg=3\n"),
                        ContainsSubstring("line 3"));
    REQUIRE_THROWS_WITH(parse_scenario_text("[scenario]\nn_avg\n"),
                        ContainsSubstring("line 2"));
    REQUIRE_THROWS_WITH(parse_scenario_text("[scenario]\nbogus_key=1\n"),
                        ContainsSubstring("unknown key"));
    REQUIRE_THROWS_WITH(parse_scenario_text("[scenario]\nn_avg=two\n"),
                        ContainsSubstring("line 2"));
    // Comments and blank lines are not errors.
    REQUIRE_NOTHROW(parse_scenario_text("# comment\n\n[scenario]\nn_avg=5\n"));
    REQUIRE(parse_scenario_text("[scenario]\nn_avg=5\n").n_avg == 5);
}

TEST_CASE("detection run is deterministic and unit-correct", "[scenario]") {
    Scenario s = scenario_worm_excised();
    s.n_avg = 2;
    const ScenarioResult a = run_scenario(s);
    const ScenarioResult b = run_scenario(s);
    REQUIRE(a.averaged.samples == b.averaged.samples);
    REQUIRE(a.report.dump() == b.report.dump());

    REQUIRE(a.true_field.unit == TraceUnit::tesla);
    REQUIRE(a.measured_volts.unit == TraceUnit::volt);
    REQUIRE(a.averaged.unit == TraceUnit::tesla);
    REQUIRE(a.filtered.unit == TraceUnit::dimensionless);
    REQUIRE(a.p2p_tesla > 0.0);
    REQUIRE(a.peak_abs_tesla > 0.0);
    REQUIRE(a.tpl.source_count == 1);

    // The magnetometer must not care where the recording electrode sits.
    Scenario moved = s;
    moved.chain.settings.electrode_position_mm += 45.0;
    const ScenarioResult c = run_scenario(moved);
    REQUIRE(a.averaged.samples == c.averaged.samples);
}

TEST_CASE("sensitivity runner recovers the anchored noise density", "[scenario]") {
    Scenario s; // default chain: anchored at 15 pT/rtHz, noise_scale 1
    const SensitivityReport r = run_sensitivity(s, MethodSelection{}, 40, 0.1);
    const double eta_true = s.chain.noise.field_noise_asd;
    REQUIRE(r.eta3 == Approx(eta_true).epsilon(0.10));
    REQUIRE(r.eta2 == Approx(eta_true).epsilon(0.20));
    REQUIRE(r.eta1 == Approx(std::sqrt(2.0) * eta_true).epsilon(0.35));
    REQUIRE(r.eta1_in_phase == Approx(r.eta1 / std::sqrt(2.0)));
    REQUIRE(r.n_trials == 40);
    REQUIRE(r.t_trial_s == 0.1);

    // Analytic attachments ride along.
    REQUIRE(r.theory_full == Approx(1.756121530780976e-11).epsilon(1e-12));
    REQUIRE(r.theory_quantum == Approx(9.46431951542684e-15).epsilon(1e-12));

    // Estimator selection: unselected methods report zero.
    MethodSelection only3{false, false, true};
    const SensitivityReport r3 = run_sensitivity(s, only3, 5, 0.1);
    REQUIRE(r3.eta1 == 0.0);
    REQUIRE(r3.eta2 == 0.0);
    REQUIRE(r3.eta3 > 0.0);

    REQUIRE_THROWS_AS(run_sensitivity(s, MethodSelection{false, false, false}, 5, 0.1),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(run_sensitivity(s, MethodSelection{}, 1, 0.1), std::invalid_argument);

    const Report tree = sensitivity_report_tree(r);
    REQUIRE(tree["estimators_t_per_rthz"]["eta3"].get<double>() == r.eta3);
    REQUIRE(tree["trials"]["count"].get<std::size_t>() == 40);
}

TEST_CASE("matched-filter study produces one SNR per set", "[scenario]") {
    Scenario s;
    s.n_avg = 2;
    const MatchedFilterStudy study = run_matched_filter_study(s, 2);
    REQUIRE(study.set_snr.size() == 2);
    REQUIRE(study.template_energy > 0.0);
    REQUIRE(study.snr_single_filtered ==
            Approx(0.5 * (study.set_snr[0] + study.set_snr[1]) / std::sqrt(2.0)));
    REQUIRE_THROWS_AS(run_matched_filter_study(s, 0), std::invalid_argument);
}

TEST_CASE("calibration coil defaults match the bench values", "[scenario]") {
    const TestCoil coil;
    REQUIRE(coil.amplitude_t() == Approx(1.8127046595680452e-9).epsilon(1e-12));
    REQUIRE(coil.rms_t() == Approx(1.2817757570690167e-9).epsilon(1e-12));
    REQUIRE(coil.f_test_hz == 250.0);
}

TEST_CASE("operating-point checks all pass", "[scenario]") {
    const ChecksResult checks = run_checks();
    REQUIRE(checks.reversals.size() == 5);
    for (const auto& chk : checks.reversals) {
        INFO(chk.name);
        REQUIRE(chk.passed);
    }
    REQUIRE_FALSE(checks.no_source_detection);
    REQUIRE(checks.all_passed);
    REQUIRE(checks.report["all_passed"].get<bool>());
}
