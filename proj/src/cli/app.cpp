#include "adx/cli/app.hpp"

#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "adx/cli/manifest.hpp"
#include "adx/cli/projection.hpp"
#include "adx/econ/regression.hpp"
#include "adx/errors.hpp"
#include "adx/market/config_io.hpp"
#include "adx/market/scenario.hpp"
#include "adx/pipeline/buyers.hpp"
#include "adx/pipeline/generate.hpp"
#include "adx/pipeline/panel_io.hpp"
#include "adx/synth/placebo.hpp"
#include "adx/text.hpp"

namespace adx::cli {

namespace {

using Outputs = std::map<std::string, std::string>;

template <typename Fn>
std::string render(Fn&& fn) {
    std::ostringstream out;
    fn(out);
    return out.str();
}

std::string output_dir(const std::string& flag, const std::string& command) {
    if (!flag.empty()) return flag;
    const char* root = std::getenv(kOutputRootEnv);
    const std::string base = root && *root ? root : "adx-out";
    return (std::filesystem::path(base) / command).string();
}

std::string join(const std::vector<std::string>& values, const char* sep = ",") {
    std::string joined;
    for (const auto& v : values) joined += (joined.empty() ? "" : sep) + v;
    return joined;
}

// --- simulate ---------------------------------------------------------------

struct SimulateOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string regime;
    std::vector<std::size_t> treated;
    bool paired = false;
};

void add_scenario(Outputs& outputs, std::ostringstream& summary, const market::Scenario& s, const std::string& suffix) {
    outputs["outcomes" + suffix + ".csv"] = render([&](auto& o) { market::write_outcomes_csv(o, s.outcomes); });
    outputs["sites" + suffix + ".csv"] = render([&](auto& o) { market::write_site_table(o, s.summary); });
    market::write_summary_kv(summary, s.summary, suffix.empty() ? "" : suffix.substr(1) + ".");
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& out) {
    const auto bytes = read_file(opt.config);
    auto scenario = market::scenario_from_json(market::parse_json_text(bytes, opt.config));
    auto config = scenario.config;
    if (opt.seed) config.seed = *opt.seed;
    auto kind = scenario.regime.value_or(market::DisclosureRegime::Kind::None);
    if (!opt.regime.empty()) kind = market::DisclosureRegime::parse_kind(opt.regime);
    const std::set<market::BidderIndex> treated =
        opt.treated.empty() ? scenario.treated : std::set<market::BidderIndex>(opt.treated.begin(), opt.treated.end());

    RunManifest manifest{"simulate", opt.config, std::to_string(config.seed), output_dir(opt.out, "simulate"),
                         {{"config", bytes}}, {}};
    Outputs outputs;
    std::ostringstream summary;
    if (!opt.paired) {
        const auto regime = market::make_regime(kind, treated, config);
        const auto s = market::simulate_scenario(config, regime);
        summary << "regime=" << regime.name() << '\n';
        add_scenario(outputs, summary, s, "");
        manifest.params = {{"regime", regime.name()}, {"paired", "0"}};
    } else {
        if (kind == market::DisclosureRegime::Kind::None) kind = market::DisclosureRegime::Kind::Full;
        const std::vector<market::DisclosureRegime> regimes{market::DisclosureRegime::none(),
                                                            market::make_regime(kind, treated, config)};
        const auto scenarios = market::simulate_paired(config, regimes);
        const auto name = regimes[1].name();
        add_scenario(outputs, summary, scenarios[0], "_none");
        add_scenario(outputs, summary, scenarios[1], "_" + name);
        bool above_everywhere = true;
        for (std::size_t k = 0; k < config.n_sites; ++k) {
            const double diff = scenarios[1].summary.site_mean_price[k] - scenarios[0].summary.site_mean_price[k];
            summary << "compare.site_mean_price_diff." << k << '=' << text::real(diff) << '\n';
            above_everywhere = above_everywhere && diff > 0.0;
        }
        summary << "compare.overall_mean_price_diff="
                << text::real(scenarios[1].summary.overall_mean_price - scenarios[0].summary.overall_mean_price) << '\n'
                << "compare." << name << "_above_none_all_sites=" << (above_everywhere ? 1 : 0) << '\n';
        if (kind == market::DisclosureRegime::Kind::Partial) {
            for (auto id : treated) {
                const auto r = market::compare_partial(scenarios[0], scenarios[1], id);
                const auto p = "partial.bidder" + std::to_string(id) + ".";
                summary << p << "win_share_none=" << text::real(r.win_share_treated_none) << '\n'
                        << p << "win_share_partial=" << text::real(r.win_share_treated_partial) << '\n'
                        << p << "mean_price_none=" << text::real(r.mean_price_treated_none) << '\n'
                        << p << "mean_price_partial=" << text::real(r.mean_price_treated_partial) << '\n';
            }
        }
        manifest.params = {{"regime", name}, {"paired", "1"}};
    }
    std::vector<std::string> ids;
    for (auto id : treated) ids.push_back(std::to_string(id));
    manifest.params.emplace_back("treated", join(ids));
    outputs["summary.txt"] = summary.str();
    write_outputs(manifest, outputs);
    out << "simulate: wrote " << manifest.out_dir << '\n';
    return kExitOk;
}

// --- did --------------------------------------------------------------------

struct DidOptions {
    std::string panel;
    std::string spec;
    std::string preset = "main";
    std::string outcome;
    std::string out;
};

econ::ModelSpec preset_spec(const std::string& name) {
    if (name == "main") return econ::ModelSpec::main_effects();
    if (name == "no-controls") return econ::ModelSpec::without_controls();
    if (name == "placebo") return econ::ModelSpec::placebo_test();
    throw SpecError("preset: expected main|no-controls|placebo, got '" + name + "'");
}

int cmd_did(const DidOptions& opt, std::ostream& out) {
    const auto panel_bytes = read_file(opt.panel);
    RunManifest manifest{"did", opt.spec, "", output_dir(opt.out, "did"), {{"panel", panel_bytes}}, {}};
    econ::ModelSpec spec;
    if (!opt.spec.empty()) {
        const auto spec_bytes = read_file(opt.spec);
        manifest.inputs.emplace_back("spec", spec_bytes);
        try {
            spec = econ::ModelSpec::from_json(nlohmann::json::parse(spec_bytes));
        } catch (const nlohmann::json::parse_error& e) {
            throw SpecError(opt.spec + ": malformed JSON: " + e.what());
        }
    } else {
        spec = preset_spec(opt.preset);
        manifest.params.emplace_back("preset", opt.preset);
    }
    if (!opt.outcome.empty()) spec.outcome = opt.outcome;
    manifest.params.emplace_back("outcome", spec.outcome);

    std::istringstream in(panel_bytes);
    const auto panel = pipeline::select_outcome(pipeline::read_panel(in), spec.outcome);
    const auto fit = econ::estimate_did(panel, spec);
    Outputs outputs;
    outputs["coefficients.csv"] = render([&](auto& o) { econ::write_coefficient_table(o, fit); });
    outputs["fit_summary.txt"] = render([&](auto& o) { econ::write_fit_summary(o, fit); });
    outputs["spec.json"] = spec.to_json().dump(2) + "\n";
    write_outputs(manifest, outputs);
    out << outputs["coefficients.csv"];
    return kExitOk;
}

// --- synth and placebo --------------------------------------------------------

struct SynthOptions {
    std::string records;
    std::string treated;
    int intervention_week = 0;
    std::string outcome = "both";
    std::vector<std::string> predictors;
    std::vector<int> pre_weeks;
    bool no_standardize = false;
    bool no_filter = false;
    double mspe_filter = 5.0;
    std::string out;
};

std::vector<synth::OutcomeKind> outcome_kinds(const std::string& name) {
    if (name == "both") return {synth::OutcomeKind::Impressions, synth::OutcomeKind::Price};
    return {synth::parse_outcome(name)};
}

synth::SynthConfig synth_config(const SynthOptions& opt) {
    synth::SynthConfig config;
    config.intervention_week = opt.intervention_week;
    config.pre_weeks = opt.pre_weeks;
    if (!opt.predictors.empty()) {
        config.predictors.blocks.clear();
        for (const auto& block : opt.predictors) config.predictors.blocks.push_back(synth::parse_block(block));
    }
    config.predictors.standardize = !opt.no_standardize;
    config.predictors.filter.enabled = !opt.no_filter;
    return config;
}

RunManifest synth_manifest(const std::string& command, const SynthOptions& opt, const std::string& bytes) {
    const auto config = synth_config(opt);
    std::vector<std::string> blocks, weeks;
    for (auto b : config.predictors.blocks) blocks.push_back(synth::to_string(b));
    for (auto w : opt.pre_weeks) weeks.push_back(std::to_string(w));
    RunManifest manifest{command, "", "", output_dir(opt.out, command), {{"records", bytes}}, {}};
    manifest.params = {{"treated", opt.treated},
                       {"intervention_week", std::to_string(opt.intervention_week)},
                       {"outcome", opt.outcome},
                       {"predictors", join(blocks)},
                       {"pre_weeks", join(weeks)},
                       {"standardize", opt.no_standardize ? "0" : "1"},
                       {"filter", opt.no_filter ? "0" : "1"}};
    return manifest;
}

std::vector<synth::BuyerWeekRecord> parse_records(const std::string& bytes) {
    std::istringstream in(bytes);
    return synth::read_records(in);
}

int cmd_synth(const SynthOptions& opt, std::ostream& out) {
    const auto bytes = read_file(opt.records);
    const auto records = parse_records(bytes);
    auto manifest = synth_manifest("synth", opt, bytes);
    Outputs outputs;
    for (auto kind : outcome_kinds(opt.outcome)) {
        auto config = synth_config(opt);
        config.outcome = kind;
        const auto fit = synth::synth_control(records, opt.treated, config);
        const auto name = synth::to_string(kind);
        outputs["weights_" + name + ".csv"] = render([&](auto& o) { synth::write_weights(o, fit); });
        outputs["gaps_" + name + ".csv"] = render([&](auto& o) { synth::write_gaps(o, fit); });
        outputs["summary_" + name + ".txt"] = render([&](auto& o) { synth::write_fit_summary(o, fit); });
        out << name << ": mspe_pre=" << text::real(fit.mspe_pre) << " mspe_post=" << text::real(fit.mspe_post)
            << '\n';
    }
    write_outputs(manifest, outputs);
    return kExitOk;
}

int cmd_placebo(const SynthOptions& opt, std::ostream& out) {
    const auto bytes = read_file(opt.records);
    const auto records = parse_records(bytes);
    auto manifest = synth_manifest("placebo", opt, bytes);
    manifest.params.emplace_back("mspe_filter", text::real(opt.mspe_filter));
    Outputs outputs;
    for (auto kind : outcome_kinds(opt.outcome)) {
        synth::PlaceboConfig config{synth_config(opt), opt.mspe_filter};
        config.synth.outcome = kind;
        const auto report = synth::placebo_inference(records, opt.treated, config);
        const auto name = synth::to_string(kind);
        outputs["placebo_" + name + ".csv"] = render([&](auto& o) { synth::write_placebo_table(o, report); });
        outputs["placebo_gaps_" + name + ".csv"] = render([&](auto& o) { synth::write_placebo_gaps(o, report); });
        outputs["placebo_summary_" + name + ".txt"] =
            render([&](auto& o) { synth::write_placebo_summary(o, report); });
        out << name << ": p_value=" << text::real(report.p_value) << " retained=" << report.n_retained << '\n';
    }
    write_outputs(manifest, outputs);
    return kExitOk;
}

// --- project-revenue ----------------------------------------------------------

struct ProjectOptions {
    ProjectionInputs inputs;
    std::string out;
};

int cmd_project(const ProjectOptions& opt, std::ostream& out) {
    const auto p = project_revenue(opt.inputs);
    write_projection_report(out, opt.inputs, p);
    if (!opt.out.empty()) {
        RunManifest manifest{"project-revenue", "", "", opt.out, {}, {}};
        const auto kv = render([&](auto& o) { write_projection_kv(o, opt.inputs, p); });
        write_outputs(manifest, {{"projection.txt", kv},
                                 {"report.txt", render([&](auto& o) { write_projection_report(o, opt.inputs, p); })}});
    }
    return kExitOk;
}

// --- generate-panel and simulate-buyers ----------------------------------------

struct GenerateOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

int cmd_generate_panel(const GenerateOptions& opt, std::ostream& out) {
    const auto bytes = read_file(opt.config);
    auto config = pipeline::PanelGeneratorConfig::from_json(market::parse_json_text(bytes, opt.config));
    if (opt.seed) config.seed = *opt.seed;
    const auto panel = pipeline::generate_panel(config);
    RunManifest manifest{"generate-panel", opt.config, std::to_string(config.seed),
                         output_dir(opt.out, "generate-panel"), {{"config", bytes}}, {{"mode", panel.mode}}};
    Outputs outputs;
    outputs["panel.csv"] = render([&](auto& o) { pipeline::write_panel(o, panel.rows); });
    outputs["provenance.json"] = panel.provenance.dump(2) + "\n";
    if (!panel.warnings.empty()) outputs["warnings.txt"] = join(panel.warnings, "\n") + "\n";
    write_outputs(manifest, outputs);
    out << "generate-panel: " << panel.rows.size() << " rows (" << panel.mode << ") in " << manifest.out_dir << '\n';
    return kExitOk;
}

int cmd_simulate_buyers(const GenerateOptions& opt, std::ostream& out) {
    pipeline::BuyerSimConfig config;
    RunManifest manifest{"simulate-buyers", opt.config, "", output_dir(opt.out, "simulate-buyers"), {}, {}};
    if (!opt.config.empty()) {
        const auto bytes = read_file(opt.config);
        manifest.inputs.emplace_back("config", bytes);
        config = pipeline::BuyerSimConfig::from_json(market::parse_json_text(bytes, opt.config));
    }
    if (opt.seed) config.seed = *opt.seed;
    manifest.seed = std::to_string(config.seed);
    const auto records = pipeline::simulate_buyer_records(config);
    Outputs outputs;
    outputs["records.csv"] = render([&](auto& o) { synth::write_records(o, records); });
    outputs["config.json"] = config.to_json().dump(2) + "\n";
    write_outputs(manifest, outputs);
    out << "simulate-buyers: " << records.size() << " records in " << manifest.out_dir << '\n';
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Ad exchange disclosure toolkit"};
    app.name("adx");
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate one market under a disclosure regime");
    simulate->add_option("--config", sim.config, "Scenario JSON")->required();
    simulate->add_option("--seed", sim.seed, "Override the config seed");
    simulate->add_option("--out", sim.out, "Output directory");
    simulate->add_option("--regime", sim.regime, "none|partial|full");
    simulate->add_option("--treated", sim.treated, "Treated bidder index (repeatable)");
    simulate->add_flag("--paired", sim.paired, "Run none and the chosen regime on one valuation draw");

    DidOptions did;
    auto* did_cmd = app.add_subcommand("did", "Diff-in-diff regression on a panel file");
    did_cmd->add_option("--panel", did.panel, "Panel file")->required();
    auto* spec_opt = did_cmd->add_option("--spec", did.spec, "Model spec JSON");
    did_cmd->add_option("--preset", did.preset, "main|no-controls|placebo")->excludes(spec_opt);
    did_cmd->add_option("--outcome", did.outcome, "Outcome column (cpm or an extra column)");
    did_cmd->add_option("--out", did.out, "Output directory");

    SynthOptions syn;
    auto* synth_cmd = app.add_subcommand("synth", "Synthetic control for one treated buyer");
    auto* placebo_cmd = app.add_subcommand("placebo", "Placebo inference over every buyer");
    for (auto* cmd : {synth_cmd, placebo_cmd}) {
        cmd->add_option("--records", syn.records, "Buyer records file")->required();
        cmd->add_option("--treated", syn.treated, "Treated buyer id")->required();
        cmd->add_option("--intervention-week", syn.intervention_week, "First treated week")->required();
        cmd->add_option("--outcome", syn.outcome, "impressions|price|both");
        cmd->add_option("--predictors", syn.predictors, "Predictor blocks")->delimiter(',');
        cmd->add_option("--pre-weeks", syn.pre_weeks, "Predictor weeks")->delimiter(',');
        cmd->add_flag("--no-standardize", syn.no_standardize, "Use raw predictor scales");
        cmd->add_flag("--no-filter", syn.no_filter, "Keep records the price and volume filter would drop");
        cmd->add_option("--out", syn.out, "Output directory");
    }
    placebo_cmd->add_option("--mspe-filter", syn.mspe_filter, "Keep placebos below this multiple of the treated pre MSPE");

    ProjectOptions proj;
    auto* project = app.add_subcommand("project-revenue", "Yearly revenue from a CPM uplift");
    project->add_option("--weekly-supply", proj.inputs.weekly_supply, "Impressions per site per week")->required();
    project->add_option("--cpm-uplift", proj.inputs.cpm_uplift, "Uplift per thousand impressions")->required();
    project->add_option("--weeks", proj.inputs.weeks, "Weeks")->required();
    project->add_option("--n-sites", proj.inputs.n_sites, "Sites")->required();
    project->add_option("--commission", proj.inputs.commission, "Exchange commission")->required();
    project->add_option("--out", proj.out, "Also write machine-readable output here");

    GenerateOptions gen;
    auto* generate = app.add_subcommand("generate-panel", "Generate a site-week panel");
    generate->add_option("--config", gen.config, "Panel generator JSON")->required();
    generate->add_option("--seed", gen.seed, "Override the config seed");
    generate->add_option("--out", gen.out, "Output directory");

    auto* buyers = app.add_subcommand("simulate-buyers", "Simulate weekly buyer records");
    buyers->add_option("--config", gen.config, "Buyer simulation JSON");
    buyers->add_option("--seed", gen.seed, "Override the config seed");
    buyers->add_option("--out", gen.out, "Output directory");

    std::vector<const char*> argv{"adx"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*simulate) return cmd_simulate(sim, out);
        if (*did_cmd) return cmd_did(did, out);
        if (*synth_cmd) return cmd_synth(syn, out);
        if (*placebo_cmd) return cmd_placebo(syn, out);
        if (*project) return cmd_project(proj, out);
        if (*generate) return cmd_generate_panel(gen, out);
        if (*buyers) return cmd_simulate_buyers(gen, out);
    } catch (const IoError& e) {
        err << "adx: " << e.what() << '\n';
        return kExitIo;
    } catch (const Error& e) {
        err << "adx: " << e.what() << '\n';
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        err << "adx: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "adx: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        err << "adx: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitUsage;
}

} // namespace adx::cli
