#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <thread>
#include <tuple>

#include "bundlegen/generator.hpp"
#include "bundlegen/io.hpp"

namespace bundlegen {

namespace {

double mean_of(const std::vector<double>& values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

/// Percentile bootstrap over per-repetition percentages.
std::pair<double, double> bootstrap_interval(const std::vector<double>& values,
                                             std::size_t samples, Rng rng) {
    if (values.size() < 2) {
        const double v = values.empty() ? 0.0 : values.front();
        return {v, v};
    }
    std::vector<double> means(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        double sum = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            sum += values[rng.uniform_index(values.size())];
        means[s] = sum / static_cast<double>(values.size());
    }
    std::sort(means.begin(), means.end());
    const auto nearest = [&](double pct) {
        auto rank = static_cast<std::size_t>(std::ceil(pct * static_cast<double>(samples)));
        rank = std::clamp<std::size_t>(rank, 1, samples);
        return means[rank - 1];
    };
    return {nearest(0.025), nearest(0.975)};
}

}  // namespace

GenerationReport run_campaign(const ScoringContext& ctx, const CampaignConfig& config) {
    if (config.objectives.empty()) throw ValidationError("campaign: no objectives given");
    if (config.strategies.empty()) throw ValidationError("campaign: no strategies given");
    if (config.reps == 0) throw ValidationError("campaign: reps must be positive");
    for (const auto& objective : config.objectives)
        if (!ctx.covers_objective(objective))
            throw ValidationError("no trained model for objective \"" + objective + "\"");

    const Catalog& catalog = ctx.catalog();
    std::vector<const Bundle*> bundles;
    std::vector<std::string> bundle_ids;
    for (const auto& [id, bundle] : catalog.bundles) {
        bundles.push_back(&bundle);
        bundle_ids.push_back(id);
    }
    if (bundles.empty()) throw ValidationError("campaign: catalog has no bundles");

    GenerationReport report;
    report.objectives = config.objectives;
    report.strategies = config.strategies;
    report.seed = config.seed;
    report.reps = config.reps;

    // Initial categories are deterministic per objective; -1 marks bundles
    // the models cannot score (no embeddable members).
    std::vector<std::vector<int>> initial(config.objectives.size(),
                                          std::vector<int>(bundles.size(), -1));
    for (std::size_t o = 0; o < config.objectives.size(); ++o)
        for (std::size_t b = 0; b < bundles.size(); ++b) {
            try {
                initial[o][b] =
                    ctx.category(*bundles[b], config.objectives[o], config.base.mode);
            } catch (const ValidationError&) {
                initial[o][b] = -1;
            }
        }

    const std::size_t n_obj = config.objectives.size();
    const std::size_t n_strat = config.strategies.size();
    const std::size_t n_bundles = bundles.size();
    const std::size_t tasks =
        n_obj * n_strat * n_bundles * config.reps;
    std::vector<int> final_category(tasks, -1);

    std::uint64_t base_state = config.seed;
    splitmix64(base_state);  // decorrelate task seeds from the raw user seed

    const auto run_task = [&](std::size_t index) {
        const std::size_t rep = index % config.reps;
        std::size_t rest = index / config.reps;
        const std::size_t b = rest % n_bundles;
        rest /= n_bundles;
        const std::size_t s = rest % n_strat;
        const std::size_t o = rest / n_strat;
        if (initial[o][b] < 0) return;  // unscorable bundle, not part of any shift

        OptimizationConfig oc = config.base;
        oc.objective = config.objectives[o];
        oc.strategy = config.strategies[s];
        oc.seed = fnv1a64(oc.objective + "|" + to_string(oc.strategy) + "|" + bundle_ids[b] +
                              "|" + std::to_string(rep),
                          base_state);
        const OptimizeResult result = optimize_bundle(*bundles[b], oc, ctx);
        final_category[index] = ctx.category(result.bundle, oc.objective, oc.mode);
    };

    const unsigned workers =
        std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(tasks)));
    if (workers == 1) {
        for (std::size_t i = 0; i < tasks; ++i) run_task(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&]() {
                for (std::size_t i = next.fetch_add(1); i < tasks; i = next.fetch_add(1))
                    run_task(i);
            });
        for (auto& t : pool) t.join();
    }

    // Shifts: (from Cat1 to >=Cat2), (Cat1 to Cat3), (Cat2 to >=Cat3).
    constexpr int from_cat[3] = {1, 1, 2};
    constexpr int to_cat[3] = {2, 3, 3};
    for (std::size_t o = 0; o < n_obj; ++o) {
        for (std::size_t s = 0; s < n_strat; ++s) {
            std::array<ShiftCell, 3> cells;
            for (std::size_t shift = 0; shift < 3; ++shift) {
                std::size_t eligible = 0;
                for (std::size_t b = 0; b < n_bundles; ++b)
                    eligible += initial[o][b] == from_cat[shift] ? 1 : 0;
                std::vector<double> per_rep(config.reps, 0.0);
                for (std::size_t rep = 0; rep < config.reps; ++rep) {
                    std::size_t upgraded = 0;
                    for (std::size_t b = 0; b < n_bundles; ++b) {
                        if (initial[o][b] != from_cat[shift]) continue;
                        const std::size_t index =
                            ((o * n_strat + s) * n_bundles + b) * config.reps + rep;
                        if (final_category[index] >= to_cat[shift]) ++upgraded;
                    }
                    per_rep[rep] = eligible == 0 ? 0.0
                                                 : 100.0 * static_cast<double>(upgraded) /
                                                       static_cast<double>(eligible);
                }
                ShiftCell cell;
                cell.eligible = eligible;
                cell.pct = mean_of(per_rep);
                const Rng boot = Rng(config.seed)
                                     .substream("bootstrap")
                                     .substream(fnv1a64(config.objectives[o] + "|" +
                                                        to_string(config.strategies[s]) + "|" +
                                                        std::to_string(shift)));
                std::tie(cell.lo, cell.hi) =
                    bootstrap_interval(per_rep, config.bootstrap_samples, boot);
                cells[shift] = cell;
            }
            report.cells[config.objectives[o]][to_string(config.strategies[s])] = cells;
        }
    }
    return report;
}

std::string GenerationReport::to_csv() const {
    std::string csv = "objective,shift";
    std::vector<std::string> strategy_names;
    for (StrategyKind s : strategies) strategy_names.push_back(to_string(s));
    for (const auto& name : strategy_names) {
        std::string lower = name;
        std::transform(lower.begin(), lower.end(), lower.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        csv += "," + lower + "_pct," + lower + "_ci_lower," + lower + "_ci_upper";
    }
    csv += "\n";
    for (const auto& objective : objectives) {
        for (std::size_t shift = 0; shift < 3; ++shift) {
            csv += objective;
            csv += ",";
            csv += kShiftNames[shift];
            for (const auto& name : strategy_names) {
                const ShiftCell& cell = cells.at(objective).at(name)[shift];
                csv += "," + format_double(cell.pct) + "," + format_double(cell.lo) + "," +
                       format_double(cell.hi);
            }
            csv += "\n";
        }
    }
    return csv;
}

ImprovementReport regression_improvement_report(const std::vector<const Bundle*>& before,
                                                const std::vector<const Bundle*>& after,
                                                const ScoringContext& ctx) {
    if (before.empty() || after.empty())
        throw ValidationError("improvement report: empty bundle set");

    ImprovementReport report;
    for (Metric m : kAllMetrics) {
        const auto it = ctx.models().per_metric.find(metric_name(m));
        if (it == ctx.models().per_metric.end()) continue;
        const RegressionModel& regressor = it->second.regressor;

        const auto mean_prediction = [&](const std::vector<const Bundle*>& set) {
            double sum = 0.0;
            std::size_t n = 0;
            for (const Bundle* bundle : set) {
                try {
                    sum += predict_value(regressor, ctx.builder().build(*bundle, m));
                    ++n;
                } catch (const ValidationError&) {
                    // Bundles without embeddable members stay out of the mean.
                }
            }
            if (n == 0)
                throw ValidationError("improvement report: no scorable bundle for metric " +
                                      metric_name(m));
            return sum / static_cast<double>(n);
        };

        const double existing = mean_prediction(before);
        const double updated = mean_prediction(after);
        const bool downward = m == Metric::N0 || m == Metric::D;
        const double delta = downward ? existing - updated : updated - existing;
        const double pct =
            std::fabs(existing) < 1e-12 ? 0.0 : 100.0 * delta / std::fabs(existing);

        report.metrics.push_back(metric_name(m));
        report.mean_existing[metric_name(m)] = existing;
        report.mean_updated[metric_name(m)] = updated;
        report.improvement_pct[metric_name(m)] = pct;
    }
    if (report.metrics.empty())
        throw ValidationError("improvement report: no trained regressor available");
    return report;
}

std::string ImprovementReport::to_csv() const {
    std::string csv = "row";
    for (const auto& m : metrics) csv += "," + m;
    csv += "\nexisting";
    for (const auto& m : metrics) csv += "," + format_double(mean_existing.at(m));
    csv += "\nupdated";
    for (const auto& m : metrics) csv += "," + format_double(mean_updated.at(m));
    csv += "\nimprovement_pct";
    for (const auto& m : metrics) csv += "," + format_double(improvement_pct.at(m));
    csv += "\n";
    return csv;
}

}  // namespace bundlegen
