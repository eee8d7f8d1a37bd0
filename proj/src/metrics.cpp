#include "g2d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "g2d/csv.hpp"
#include "g2d/error.hpp"
#include "g2d/parallel.hpp"
#include "g2d/rng.hpp"

namespace g2d {

void ScoredSet::validate() const {
  if (labels.size() != scores.size()) {
    throw G2dError("scored set: " + std::to_string(labels.size()) + " labels for " +
                   std::to_string(scores.size()) + " scores");
  }
  if (!frame_index.empty() && frame_index.size() != scores.size()) {
    throw G2dError("scored set: frame index size mismatch");
  }
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw G2dError("scored set: score " + std::to_string(s) + " outside [0, 1]");
    }
  }
}

namespace {

struct Confusion {
  long tp = 0, fp = 0, tn = 0, fn = 0;
};

// anomalous iff the normal probability (1 - anomaly score) falls below alpha
Confusion confusion_at(const ScoredSet& scored, double alpha) {
  Confusion c;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    const bool predicted_anomaly = (1.0 - scored.scores[i]) < alpha;
    const bool is_anomaly = scored.labels[i] == 1;
    if (predicted_anomaly && is_anomaly) ++c.tp;
    else if (predicted_anomaly) ++c.fp;
    else if (is_anomaly) ++c.fn;
    else ++c.tn;
  }
  return c;
}

void require_both_classes(const ScoredSet& scored, const char* who) {
  bool has0 = false, has1 = false;
  for (int y : scored.labels) {
    has0 |= y == 0;
    has1 |= y == 1;
  }
  if (!has0 || !has1) {
    throw G2dError(std::string(who) + ": both classes must be present");
  }
}

struct SweepPoint {
  double threshold;  // predict anomalous iff score >= threshold
  double fpr;
  double fnr;
};

// threshold sweep over all distinct scores plus a sentinel above the max
std::vector<SweepPoint> threshold_sweep(const ScoredSet& scored) {
  const std::size_t n = scored.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scored.scores[a] < scored.scores[b];
  });
  long n_pos = 0, n_neg = 0;
  for (int y : scored.labels) (y == 1 ? n_pos : n_neg)++;

  std::vector<SweepPoint> sweep;
  long pos_below = 0, neg_below = 0;  // strictly below current threshold
  std::size_t i = 0;
  while (i < n) {
    const double t = scored.scores[order[i]];
    SweepPoint p;
    p.threshold = t;
    p.fnr = static_cast<double>(pos_below) / static_cast<double>(n_pos);
    p.fpr = static_cast<double>(n_neg - neg_below) / static_cast<double>(n_neg);
    sweep.push_back(p);
    while (i < n && scored.scores[order[i]] == t) {
      (scored.labels[order[i]] == 1 ? pos_below : neg_below)++;
      ++i;
    }
  }
  SweepPoint sentinel;
  sentinel.threshold = scored.scores[order[n - 1]] + 1.0;
  sentinel.fnr = 1.0;
  sentinel.fpr = 0.0;
  sweep.push_back(sentinel);
  return sweep;
}

}  // namespace

double f1_score(const ScoredSet& scored, double alpha) {
  scored.validate();
  if (scored.size() == 0) throw G2dError("f1: empty scored set");
  const Confusion c = confusion_at(scored, alpha);
  if (c.tp + c.fp == 0 && c.tp + c.fn == 0) return 1.0;  // nothing predicted, nothing to find
  const double denom = static_cast<double>(2 * c.tp + c.fp + c.fn);
  if (denom == 0.0) return 0.0;
  return 2.0 * static_cast<double>(c.tp) / denom;
}

double roc_auc(const ScoredSet& scored) {
  scored.validate();
  require_both_classes(scored, "roc_auc");
  const std::size_t n = scored.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scored.scores[a] < scored.scores[b];
  });
  // midranks for ties
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scored.scores[order[j]] == scored.scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) rank[order[k]] = mid;
    i = j;
  }
  double rank_sum_pos = 0.0;
  long n_pos = 0, n_neg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (scored.labels[k] == 1) {
      rank_sum_pos += rank[k];
      ++n_pos;
    } else {
      ++n_neg;
    }
  }
  const double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double equal_error_rate(const ScoredSet& scored) {
  scored.validate();
  require_both_classes(scored, "eer");
  const std::vector<SweepPoint> sweep = threshold_sweep(scored);
  // diff = fpr - fnr decreases monotonically from +1 to -1 over the sweep
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const double d = sweep[i].fpr - sweep[i].fnr;
    if (d <= 0.0) {
      if (d == 0.0 || i == 0) return sweep[i].fpr;
      const double d_prev = sweep[i - 1].fpr - sweep[i - 1].fnr;
      const double lambda = d_prev / (d_prev - d);
      return sweep[i - 1].fpr + lambda * (sweep[i].fpr - sweep[i - 1].fpr);
    }
  }
  return 0.0;  // unreachable: the sentinel always has d = -1
}

ScoredSet frame_scores(const ScoredSet& patch_scored) {
  patch_scored.validate();
  if (patch_scored.frame_index.empty()) {
    throw G2dError("frame_scores: samples carry no frame index");
  }
  std::map<int, std::pair<double, int>> frames;  // frame -> (max score, max label)
  for (std::size_t i = 0; i < patch_scored.size(); ++i) {
    auto [it, inserted] = frames.try_emplace(patch_scored.frame_index[i],
                                             patch_scored.scores[i], patch_scored.labels[i]);
    if (!inserted) {
      it->second.first = std::max(it->second.first, patch_scored.scores[i]);
      it->second.second = std::max(it->second.second, patch_scored.labels[i]);
    }
  }
  ScoredSet out;
  for (const auto& [frame, agg] : frames) {
    out.scores.push_back(agg.first);
    out.labels.push_back(agg.second);
    out.frame_index.push_back(frame);
  }
  return out;
}

double energy_distance(const Tensor& a, const Tensor& b) {
  if (a.empty() || b.empty()) throw G2dError("energy_distance: empty batch");
  const std::size_t d = a.row_size();
  if (d != b.row_size()) {
    throw G2dError("energy_distance: sample dimensionality differs, " +
                   Tensor::shape_str(a.shape()) + " vs " + Tensor::shape_str(b.shape()));
  }
  const auto pair_term = [d](const Tensor& x, const Tensor& y) {
    const std::size_t nx = x.dim(0), ny = y.dim(0);
    const std::size_t chunk = 64;
    const std::size_t n_chunks = (nx + chunk - 1) / chunk;
    std::vector<double> partial(n_chunks, 0.0);
    parallel_chunks(nx, chunk, [&](std::size_t begin, std::size_t end, std::size_t ci) {
      double acc = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        const double* xi = x.data() + i * d;
        for (std::size_t j = 0; j < ny; ++j) {
          const double* yj = y.data() + j * d;
          double dist2 = 0.0;
          for (std::size_t k = 0; k < d; ++k) {
            const double diff = xi[k] - yj[k];
            dist2 += diff * diff;
          }
          acc += std::sqrt(dist2);
        }
      }
      partial[ci] = acc;
    });
    double total = 0.0;
    for (double p : partial) total += p;  // fixed order, thread-count independent
    return total / (static_cast<double>(nx) * static_cast<double>(ny));
  };

  const double ab = pair_term(a, b);
  const double aa = pair_term(a, a);
  const double bb = pair_term(b, b);
  return 2.0 * ab - aa - bb;
}

Tensor pca_project(const Tensor& samples, std::size_t dim) {
  if (samples.rank() < 2) throw G2dError("pca_project: batch must be [N, ...]");
  const std::size_t n = samples.dim(0), d = samples.row_size();
  if (n < 3) throw G2dError("pca_project: need at least 3 samples");
  if (dim < 1 || dim > d) throw G2dError("pca_project: invalid target dimension");

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = samples.data() + i * d;
    for (std::size_t k = 0; k < d; ++k) mean[k] += row[k];
  }
  for (double& v : mean) v /= static_cast<double>(n);

  std::vector<double> cov(d * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = samples.data() + i * d;
    for (std::size_t r = 0; r < d; ++r) {
      const double xr = row[r] - mean[r];
      for (std::size_t c = r; c < d; ++c) {
        cov[r * d + c] += xr * (row[c] - mean[c]);
      }
    }
  }
  double trace = 0.0;
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = r; c < d; ++c) {
      cov[r * d + c] /= static_cast<double>(n - 1);
      cov[c * d + r] = cov[r * d + c];
    }
    trace += cov[r * d + r];
  }
  if (trace <= 0.0) throw G2dError("pca_project: zero-variance data");

  const auto matvec = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (std::size_t r = 0; r < d; ++r) {
      double acc = 0.0;
      const double* row = cov.data() + r * d;
      for (std::size_t c = 0; c < d; ++c) acc += row[c] * v[c];
      out[r] = acc;
    }
  };

  std::vector<std::vector<double>> components;
  Rng rng(12345);
  for (std::size_t comp = 0; comp < dim; ++comp) {
    std::vector<double> v(d), next(d);
    for (double& x : v) x = rng.gaussian();
    // power iteration with re-orthogonalization against earlier components,
    // so the basis stays orthonormal to machine precision
    const auto project_out = [&](std::vector<double>& w) {
      for (const auto& prev : components) {
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += w[k] * prev[k];
        for (std::size_t k = 0; k < d; ++k) w[k] -= dot * prev[k];
      }
    };
    const auto normalize = [&](std::vector<double>& w) {
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 0.0) {
        for (double& x : w) x /= norm;
      }
      return norm;
    };
    project_out(v);
    if (normalize(v) == 0.0) v[comp % d] = 1.0;
    for (int iter = 0; iter < 1000; ++iter) {
      matvec(v, next);
      project_out(next);
      const double nn = normalize(next);
      if (nn < trace * 1e-15) break;  // deflated subspace, keep the current v
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += v[k] * next[k];
      v = next;
      if (std::abs(std::abs(dot) - 1.0) < 1e-15) break;
    }
    project_out(v);
    normalize(v);
    components.push_back(v);
  }

  Tensor out({n, dim});
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = samples.data() + i * d;
    for (std::size_t comp = 0; comp < dim; ++comp) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += (row[k] - mean[k]) * components[comp][k];
      out[i * dim + comp] = acc;
    }
  }
  return out;
}

std::vector<RocPoint> roc_curve(const ScoredSet& scored) {
  scored.validate();
  require_both_classes(scored, "roc_curve");
  const std::vector<SweepPoint> sweep = threshold_sweep(scored);
  std::vector<RocPoint> out;
  out.reserve(sweep.size());
  for (auto it = sweep.rbegin(); it != sweep.rend(); ++it) {
    out.push_back(RocPoint{it->fpr, 1.0 - it->fnr});
  }
  return out;
}

void fill_confusion(const ScoredSet& scored, double alpha, EvalReport& report) {
  const Confusion c = confusion_at(scored, alpha);
  report.tp = c.tp;
  report.fp = c.fp;
  report.tn = c.tn;
  report.fn = c.fn;
}

namespace {

void write_or_throw(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw G2dError("emit_report: cannot open " + path.string());
  out << content;
  if (!out) throw G2dError("emit_report: write failed for " + path.string());
}

std::string svg_polyline(const std::vector<std::pair<double, double>>& pts, double x0, double y0,
                         double w, double h, double xmin, double xmax, double ymin, double ymax,
                         const char* color) {
  std::string s = "<polyline fill=\"none\" stroke=\"" + std::string(color) +
                  "\" stroke-width=\"2\" points=\"";
  for (const auto& [x, y] : pts) {
    const double px = x0 + (x - xmin) / (xmax - xmin) * w;
    const double py = y0 + h - (y - ymin) / (ymax - ymin) * h;
    s += std::to_string(px) + "," + std::to_string(py) + " ";
  }
  s += "\"/>\n";
  return s;
}

}  // namespace

void emit_report(const EvalReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  std::string metrics = "metric,value\n";
  metrics += "f1," + csv_double(report.f1) + "\n";
  metrics += "auc," + csv_double(report.auc) + "\n";
  metrics += "eer," + csv_double(report.eer) + "\n";
  metrics += "tp," + std::to_string(report.tp) + "\n";
  metrics += "fp," + std::to_string(report.fp) + "\n";
  metrics += "tn," + std::to_string(report.tn) + "\n";
  metrics += "fn," + std::to_string(report.fn) + "\n";
  for (const auto& [name, value] : report.drift) {
    metrics += name + "," + csv_double(value) + "\n";
  }
  write_or_throw(out_dir / "metrics.csv", metrics);

  std::string roc = "fpr,tpr\n";
  for (const RocPoint& p : report.roc) {
    roc += csv_double(p.fpr) + "," + csv_double(p.tpr) + "\n";
  }
  write_or_throw(out_dir / "roc.csv", roc);

  std::string sweep = "contamination,f1\n";
  for (const auto& [c, f1] : report.f1_vs_contamination) {
    sweep += csv_double(c) + "," + csv_double(f1) + "\n";
  }
  write_or_throw(out_dir / "f1_vs_contamination.csv", sweep);

  if (!report.frames.empty()) {
    std::string frames = "frame,score,label,predicted\n";
    for (const FrameRow& r : report.frames) {
      frames += std::to_string(r.frame) + "," + csv_double(r.score) + "," +
                std::to_string(r.label) + "," + std::to_string(r.predicted) + "\n";
    }
    write_or_throw(out_dir / "frames.csv", frames);
  }

  // presentation-only plot: ROC and the F1-vs-contamination curve
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"320\" "
      "viewBox=\"0 0 640 320\">\n"
      "<rect width=\"640\" height=\"320\" fill=\"white\"/>\n"
      "<rect x=\"40\" y=\"20\" width=\"260\" height=\"260\" fill=\"none\" stroke=\"black\"/>\n"
      "<rect x=\"360\" y=\"20\" width=\"260\" height=\"260\" fill=\"none\" stroke=\"black\"/>\n"
      "<text x=\"150\" y=\"305\" font-size=\"12\">ROC</text>\n"
      "<text x=\"430\" y=\"305\" font-size=\"12\">F1 vs contamination</text>\n";
  if (!report.roc.empty()) {
    std::vector<std::pair<double, double>> pts;
    for (const RocPoint& p : report.roc) pts.emplace_back(p.fpr, p.tpr);
    svg += svg_polyline(pts, 40, 20, 260, 260, 0, 1, 0, 1, "#1f77b4");
  }
  if (!report.f1_vs_contamination.empty()) {
    double xmin = report.f1_vs_contamination.front().first;
    double xmax = report.f1_vs_contamination.back().first;
    if (xmax <= xmin) xmax = xmin + 1.0;
    svg += svg_polyline(report.f1_vs_contamination, 360, 20, 260, 260, xmin, xmax, 0, 1,
                        "#d62728");
  }
  svg += "</svg>\n";
  write_or_throw(out_dir / "plots.svg", svg);
}

}  // namespace g2d
