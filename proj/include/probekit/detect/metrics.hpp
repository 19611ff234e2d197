#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "probekit/core/codebook.hpp"
#include "probekit/core/json_io.hpp"
#include "probekit/detect/forest.hpp"

namespace probekit::detect {

// Ranks by score descending (ties keep index order) and sums precision@k
// over the ranks holding a positive, divided by the number of positives.
// Throws ValidationError on length mismatch or zero positives.
double average_precision(std::span<const double> scores, std::span<const bool> positives);

struct EvalRow {
  std::string target_id;
  std::size_t true_label = 0;
  std::size_t predicted = 0;
  std::vector<double> votes;
};

struct EvalReport {
  std::vector<std::string> labels;  // codebook order
  double accuracy = 0.0;
  // One-vs-rest AP per class; empty when the class has no test rows.
  std::vector<std::optional<double>> per_class_ap;
  double macro_ap = 0.0;  // mean of the defined per-class values
  std::vector<std::vector<std::size_t>> confusion;  // rows = true, cols = predicted
  std::size_t n_test = 0;
  std::vector<EvalRow> rows;
};

// Scores every row with forest_predict_proba and fills the report.
EvalReport evaluate(const Forest& forest, MatrixView X_test, std::span<const std::size_t> y_test,
                    const Codebook& codebook, std::span<const std::string> row_ids = {});

// Report over a subset of already-scored rows (e.g. one dataset slice).
EvalReport restrict_report(const EvalReport& report, std::span<const std::size_t> row_indices);

// Pools the rows of reports over one codebook, e.g. repeated holdout splits.
EvalReport merge_reports(std::span<const EvalReport> reports);

Json eval_report_to_json(const EvalReport& report);
// Header row "true\predicted,<labels...>", then one row per true label.
std::string confusion_csv(const EvalReport& report);
std::string eval_report_table(const EvalReport& report);

}  // namespace probekit::detect
