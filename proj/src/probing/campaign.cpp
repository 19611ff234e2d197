#include "probekit/probing/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <thread>

#include "probekit/core/error.hpp"
#include "probekit/probing/divergence.hpp"

namespace probekit::probing {

void Campaign::validate() const {
  if (probes.empty()) throw ValidationError("campaign probe set is empty");
  if (repeats == 0) throw ValidationError("campaign repeats must be positive");
  if (probes.modality() == Modality::vector && repeats != 1) {
    throw ValidationError("repeats apply to the text modality only");
  }
  for (const auto& t : targets) {
    if (t.modality != probes.modality()) {
      throw ValidationError("target '" + t.id + "' modality differs from the probe set");
    }
  }
}

Json collection_report_to_json(const CollectionReport& report) {
  Json j = Json::object();
  j["n_records"] = report.n_records;
  j["n_errors"] = report.n_errors;
  Json targets = Json::array();
  for (const auto& t : report.targets) {
    Json e = Json::object();
    e["target_id"] = t.target_id;
    e["n_records"] = t.n_records;
    e["n_errors"] = t.n_errors;
    e["errors"] = t.errors;
    targets.push_back(std::move(e));
  }
  j["targets"] = std::move(targets);
  return j;
}

Rng query_rng(std::uint64_t campaign_seed, const std::string& target_id, const std::string& probe_id,
              std::size_t repeat) {
  return Rng(derive_seed(derive_seed(derive_seed(campaign_seed, target_id), probe_id), repeat));
}

CollectionReport collect(const Campaign& campaign, JsonlWriter& sink, const Clock& clock) {
  campaign.validate();
  const std::size_t n_targets = campaign.targets.size();
  std::vector<std::vector<ResponseRecord>> per_target(n_targets);
  CollectionReport report;
  report.targets.resize(n_targets);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t t = next++; t < n_targets; t = next++) {
      const Target& target = campaign.targets[t];
      TargetStatus& status = report.targets[t];
      status.target_id = target.id;
      for (const auto& probe : campaign.probes.probes()) {
        for (std::size_t r = 0; r < campaign.repeats; ++r) {
          Rng rng = query_rng(campaign.seed, target.id, probe.id, r);
          try {
            per_target[t].push_back(query(target, probe, rng, campaign.label_kind, clock));
          } catch (const Error& e) {
            ++status.n_errors;
            status.errors.push_back(probe.id + "#" + std::to_string(r) + ": " + e.what());
          }
        }
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(campaign.workers, 1, std::max<std::size_t>(1, n_targets));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  for (std::size_t t = 0; t < n_targets; ++t) {
    for (const auto& rec : per_target[t]) sink.write(rec);
    report.targets[t].n_records = per_target[t].size();
    report.n_records += per_target[t].size();
    report.n_errors += report.targets[t].n_errors;
  }
  return report;
}

std::vector<ProbeScore> score_probes(const ProbeSet& candidates, const std::vector<Target>& calibration) {
  if (candidates.modality() != Modality::vector) {
    throw ValidationError("probe selection applies to vector probes; text probes are a fixed list");
  }
  if (calibration.size() < 2) throw ValidationError("select_probes: need at least two calibration targets");

  std::vector<ProbeScore> ranking;
  ranking.reserve(candidates.size());
  Rng unused(0);
  for (const auto& probe : candidates.probes()) {
    std::vector<ProbabilityVector> outputs;
    outputs.reserve(calibration.size());
    for (const auto& target : calibration) {
      try {
        outputs.push_back(std::get<ProbabilityVector>(query(target, probe, unused).output));
      } catch (const Error& e) {
        throw Error(e.kind(), "calibration query failed (target '" + target.id + "', probe '" + probe.id +
                                  "'): " + e.what());
      }
    }
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < outputs.size(); ++a) {
      for (std::size_t b = a + 1; b < outputs.size(); ++b, ++pairs) total += js_divergence(outputs[a], outputs[b]);
    }
    ranking.push_back(ProbeScore{probe.id, total / static_cast<double>(pairs)});
  }
  std::sort(ranking.begin(), ranking.end(), [](const ProbeScore& a, const ProbeScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.probe_id < b.probe_id;
  });
  return ranking;
}

ProbeSelection select_probes(const ProbeSet& candidates, const std::vector<Target>& calibration, std::size_t k) {
  if (candidates.modality() == Modality::vector && (k == 0 || k > candidates.size())) {
    throw ValidationError("select_probes: k must lie in [1, |candidates|]");
  }
  auto ranking = score_probes(candidates, calibration);
  std::vector<Probe> chosen;
  for (std::size_t i = 0; i < k; ++i) chosen.push_back(*candidates.find(ranking[i].probe_id));
  return ProbeSelection{ProbeSet(candidates.name() + "-jsd-top" + std::to_string(k), Modality::vector,
                                 candidates.dim(), std::move(chosen)),
                        std::move(ranking)};
}

ProbeSelection select_probes_by_shell(const ProbeSet& candidates, const std::vector<Target>& calibration,
                                      const std::vector<double>& shell_radii) {
  if (shell_radii.empty()) throw ValidationError("select_probes_by_shell: no shells");
  for (double r : shell_radii) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ValidationError("select_probes_by_shell: shell radii must be positive");
  }
  auto ranking = score_probes(candidates, calibration);
  const auto shell_of = [&](const Probe& p) {
    double norm = 0.0;
    for (double x : p.values()) norm += x * x;
    norm = std::sqrt(norm);
    std::size_t best = 0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < shell_radii.size(); ++s) {
      const double gap = norm > 0.0 ? std::abs(std::log(norm / shell_radii[s])) : std::abs(std::log(shell_radii[s]));
      if (gap < best_gap || (gap == best_gap && shell_radii[s] < shell_radii[best])) {
        best = s;
        best_gap = gap;
      }
    }
    return best;
  };
  std::vector<const Probe*> chosen(shell_radii.size(), nullptr);
  for (const auto& score : ranking) {
    const Probe* p = candidates.find(score.probe_id);
    const std::size_t s = shell_of(*p);
    if (!chosen[s]) chosen[s] = p;
  }
  std::vector<Probe> out;
  for (std::size_t s = 0; s < chosen.size(); ++s) {
    if (!chosen[s]) {
      throw ValidationError("select_probes_by_shell: no candidate near radius " + std::to_string(shell_radii[s]));
    }
    out.push_back(*chosen[s]);
  }
  return ProbeSelection{ProbeSet(candidates.name() + "-jsd-shells", Modality::vector, candidates.dim(), std::move(out)),
                        std::move(ranking)};
}

ProbeSet radial_pool(std::size_t dim, std::size_t n, double r_min, double r_max, std::uint64_t seed) {
  if (dim == 0) throw ValidationError("radial_pool: dim must be positive");
  if (!(r_min > 0.0) || !(r_max >= r_min) || !std::isfinite(r_max)) {
    throw ValidationError("radial_pool: need 0 < r_min <= r_max");
  }
  std::vector<Probe> probes;
  Rng rng(derive_seed(seed, "radial-pool"));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v(dim);
    double norm = 0.0;
    while (norm == 0.0) {
      norm = 0.0;
      for (double& x : v) {
        x = rng.normal();
        norm += x * x;
      }
    }
    const double radius = std::exp(rng.uniform(std::log(r_min), std::log(r_max)));
    const double scale = radius / std::sqrt(norm);
    for (double& x : v) x *= scale;
    char id[32];
    std::snprintf(id, sizeof id, "ray-%03zu", i);
    probes.push_back(Probe::vector(id, std::move(v)));
  }
  return ProbeSet("rays", Modality::vector, dim, std::move(probes));
}

ProbeSet merge_pools(const std::string& name, const ProbeSet& a, const ProbeSet& b) {
  if (a.modality() != b.modality() || a.dim() != b.dim()) {
    throw ValidationError("merge_pools: '" + a.name() + "' and '" + b.name() + "' disagree on modality or dim");
  }
  std::vector<Probe> probes = a.probes();
  probes.insert(probes.end(), b.probes().begin(), b.probes().end());
  return ProbeSet(name, a.modality(), a.dim(), std::move(probes));
}

ProbeSet candidate_pool(std::size_t dim, std::size_t n_random, double range,
                        const std::vector<zoo::DatasetSpec>& calibration_datasets, std::uint64_t seed) {
  std::vector<Probe> probes;
  Rng rng(derive_seed(seed, "candidate-pool"));
  for (std::size_t i = 0; i < n_random; ++i) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.uniform(-range, range);
    char id[32];
    std::snprintf(id, sizeof id, "rand-%03zu", i);
    probes.push_back(Probe::vector(id, std::move(v)));
  }
  for (const auto& spec : calibration_datasets) {
    if (spec.dim != dim) throw ValidationError("calibration dataset '" + spec.name + "' has a different dim");
    const auto centroids = zoo::class_centroids(zoo::synth_dataset(spec));
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "/c%02zu", c);
      probes.push_back(Probe::vector(spec.name + suffix, centroids[c]));
    }
  }
  return ProbeSet("candidates", Modality::vector, dim, std::move(probes));
}

ProbeSet default_text_probes() {
  return ProbeSet("text-probes", Modality::text, 0,
                  {Probe::text("hello", "Hello"), Probe::text("2+2", "2+2"), Probe::text("a", "A"),
                   Probe::text("mario", "Mario")});
}

}  // namespace probekit::probing
