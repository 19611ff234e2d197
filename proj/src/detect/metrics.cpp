#include "probekit/detect/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <numeric>
#include <sstream>

#include "probekit/core/error.hpp"

namespace probekit::detect {

double average_precision(std::span<const double> scores, std::span<const bool> positives) {
  if (scores.size() != positives.size()) throw ValidationError("average_precision: length mismatch");
  const auto n_pos = static_cast<std::size_t>(std::count(positives.begin(), positives.end(), true));
  if (n_pos == 0) throw ValidationError("average_precision: no positive examples");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!positives[order[k]]) continue;
    ++hits;
    ap += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return ap / static_cast<double>(n_pos);
}

namespace {

void finish_report(EvalReport& report) {
  const std::size_t k = report.labels.size();
  report.n_test = report.rows.size();
  report.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::size_t correct = 0;
  for (const auto& row : report.rows) {
    ++report.confusion[row.true_label][row.predicted];
    correct += row.true_label == row.predicted;
  }
  report.accuracy = report.n_test == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(report.n_test);

  report.per_class_ap.assign(k, std::nullopt);
  double sum = 0.0;
  std::size_t defined = 0;
  std::vector<double> scores(report.n_test);
  std::unique_ptr<bool[]> positives(new bool[report.n_test]);
  for (std::size_t c = 0; c < k; ++c) {
    bool any = false;
    for (std::size_t r = 0; r < report.n_test; ++r) {
      scores[r] = report.rows[r].votes[c];
      positives[r] = report.rows[r].true_label == c;
      any = any || positives[r];
    }
    if (!any) continue;
    const double ap = average_precision(scores, std::span<const bool>(positives.get(), report.n_test));
    report.per_class_ap[c] = ap;
    sum += ap;
    ++defined;
  }
  report.macro_ap = defined == 0 ? 0.0 : sum / static_cast<double>(defined);
}

}  // namespace

EvalReport evaluate(const Forest& forest, MatrixView X_test, std::span<const std::size_t> y_test,
                    const Codebook& codebook, std::span<const std::string> row_ids) {
  if (y_test.size() != X_test.rows) throw ValidationError("evaluate: every test row needs a label");
  if (codebook.size() != forest.n_classes) throw ValidationError("evaluate: codebook and forest disagree on K");
  EvalReport report;
  report.labels = codebook.values();
  for (std::size_t r = 0; r < X_test.rows; ++r) {
    if (y_test[r] >= codebook.size()) {
      throw ValidationError("evaluate: test label " + std::to_string(y_test[r]) + " is not in the codebook");
    }
    EvalRow row;
    row.target_id = r < row_ids.size() ? row_ids[r] : std::to_string(r);
    row.true_label = y_test[r];
    row.votes = forest_predict_proba(forest, X_test.row(r)).values();
    row.predicted = argmax_label(row.votes);
    report.rows.push_back(std::move(row));
  }
  finish_report(report);
  return report;
}

EvalReport restrict_report(const EvalReport& report, std::span<const std::size_t> row_indices) {
  EvalReport out;
  out.labels = report.labels;
  for (auto i : row_indices) out.rows.push_back(report.rows.at(i));
  finish_report(out);
  return out;
}

EvalReport merge_reports(std::span<const EvalReport> reports) {
  if (reports.empty()) throw ValidationError("merge_reports: nothing to merge");
  EvalReport out;
  out.labels = reports.front().labels;
  for (const auto& r : reports) {
    if (r.labels != out.labels) throw ValidationError("merge_reports: reports use different codebooks");
    out.rows.insert(out.rows.end(), r.rows.begin(), r.rows.end());
  }
  finish_report(out);
  return out;
}

Json eval_report_to_json(const EvalReport& report) {
  Json j = Json::object();
  j["labels"] = report.labels;
  j["n_test"] = report.n_test;
  j["accuracy"] = report.accuracy;
  j["macro_ap"] = report.macro_ap;
  Json ap = Json::object();
  for (std::size_t c = 0; c < report.labels.size(); ++c) {
    ap[report.labels[c]] = report.per_class_ap[c] ? Json(*report.per_class_ap[c]) : Json(nullptr);
  }
  j["per_class_ap"] = std::move(ap);
  j["confusion"] = report.confusion;
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    Json e = Json::object();
    e["target_id"] = r.target_id;
    e["true"] = report.labels[r.true_label];
    e["predicted"] = report.labels[r.predicted];
    e["votes"] = r.votes;
    rows.push_back(std::move(e));
  }
  j["rows"] = std::move(rows);
  return j;
}

std::string confusion_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "true\\predicted";
  for (const auto& l : report.labels) out << ',' << l;
  out << '\n';
  for (std::size_t t = 0; t < report.labels.size(); ++t) {
    out << report.labels[t];
    for (auto c : report.confusion[t]) out << ',' << c;
    out << '\n';
  }
  return out.str();
}

std::string eval_report_table(const EvalReport& report) {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "n_test=%zu  accuracy=%.4f  macro_AP=%.4f\n", report.n_test, report.accuracy,
                report.macro_ap);
  out << buf;
  std::size_t width = 5;
  for (const auto& l : report.labels) width = std::max(width, l.size());
  for (std::size_t c = 0; c < report.labels.size(); ++c) {
    if (report.per_class_ap[c]) {
      std::snprintf(buf, sizeof buf, "  %-*s  AP=%.4f\n", static_cast<int>(width), report.labels[c].c_str(),
                    *report.per_class_ap[c]);
    } else {
      std::snprintf(buf, sizeof buf, "  %-*s  AP=n/a\n", static_cast<int>(width), report.labels[c].c_str());
    }
    out << buf;
  }
  out << "confusion (rows = true, cols = predicted):\n";
  for (std::size_t t = 0; t < report.labels.size(); ++t) {
    std::snprintf(buf, sizeof buf, "  %-*s ", static_cast<int>(width), report.labels[t].c_str());
    out << buf;
    for (auto c : report.confusion[t]) {
      std::snprintf(buf, sizeof buf, "%4zu", c);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace probekit::detect
