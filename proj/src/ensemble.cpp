#include "samslr/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace samslr::ensemble {

double EnsembleWeights::weight_for(const std::string& modality) const {
  for (const auto& [m, a] : entries)
    if (m == modality) return a;
  return 0.0;
}

ScoreVector fuse(const std::vector<ScoreVector>& scores, const EnsembleWeights& weights) {
  if (weights.entries.empty()) throw std::invalid_argument("fuse: no weights");
  size_t nc = 0;
  for (const auto& s : scores) {
    if (nc == 0) nc = s.values.size();
    if (s.values.size() != nc) throw std::invalid_argument("fuse: inconsistent class counts");
    for (double v : s.values)
      if (!std::isfinite(v)) throw std::invalid_argument("fuse: non-finite score");
  }
  if (nc == 0) throw std::invalid_argument("fuse: empty score set");

  ScoreVector out;
  out.modality = "fused";
  out.values.assign(nc, 0.0);
  for (const auto& [modality, alpha] : weights.entries) {
    if (alpha < 0.0) throw std::invalid_argument("fuse: negative weight for " + modality);
    const ScoreVector* found = nullptr;
    for (const auto& s : scores)
      if (s.modality == modality) {
        found = &s;
        break;
      }
    if (!found) {
      if (alpha > 0.0)
        throw std::invalid_argument("fuse: missing modality '" + modality + "' with nonzero weight");
      continue;
    }
    if (out.sample_id.empty()) out.sample_id = found->sample_id;
    else if (found->sample_id != out.sample_id)
      throw std::invalid_argument("fuse: mismatched sample ids in fusion set");
    for (size_t k = 0; k < nc; ++k) out.values[k] += alpha * found->values[k];
  }
  for (const auto& s : scores)
    if (weights.weight_for(s.modality) == 0.0 &&
        std::none_of(weights.entries.begin(), weights.entries.end(),
                     [&](const auto& e) { return e.first == s.modality; }))
      std::cerr << "warning: ignoring modality '" << s.modality << "' with no weight\n";
  return out;
}

int predict(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("predict: empty scores");
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

int predict(const ScoreVector& fused) { return predict(fused.values); }

ScoreVector fuse_streams(const std::vector<ScoreVector>& stream_scores,
                         const EnsembleWeights& stream_weights) {
  return fuse(stream_scores, stream_weights);
}

double top1_accuracy(const std::vector<ModalityScores>& scores, const std::vector<int>& labels,
                     const std::vector<double>& weights) {
  if (scores.size() != weights.size())
    throw std::invalid_argument("top1_accuracy: weight/modality count mismatch");
  if (scores.empty()) throw std::invalid_argument("top1_accuracy: no modalities");
  const size_t n = labels.size();
  for (const auto& m : scores)
    if (m.rows.size() != n) throw std::invalid_argument("top1_accuracy: row count mismatch");
  size_t correct = 0;
  std::vector<double> fusedrow;
  for (size_t i = 0; i < n; ++i) {
    fusedrow.assign(scores[0].rows[i].size(), 0.0);
    for (size_t m = 0; m < scores.size(); ++m)
      for (size_t k = 0; k < fusedrow.size(); ++k)
        fusedrow[k] += weights[m] * scores[m].rows[i][k];
    if (predict(fusedrow) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

namespace {

EnsembleWeights to_weights(const std::vector<ModalityScores>& scores,
                           const std::vector<double>& w) {
  EnsembleWeights out;
  for (size_t m = 0; m < scores.size(); ++m) out.entries.emplace_back(scores[m].modality, w[m]);
  return out;
}

}  // namespace

EnsembleWeights tune_weights(const std::vector<ModalityScores>& scores,
                             const std::vector<int>& labels, const std::vector<double>& grid,
                             long long beam_limit) {
  if (grid.empty()) throw std::invalid_argument("tune_weights: empty grid");
  if (scores.empty()) throw std::invalid_argument("tune_weights: no modalities");
  for (double g : grid)
    if (g < 0.0) throw std::invalid_argument("tune_weights: negative grid value");
  std::vector<double> sorted_grid = grid;
  std::sort(sorted_grid.begin(), sorted_grid.end());
  sorted_grid.erase(std::unique(sorted_grid.begin(), sorted_grid.end()), sorted_grid.end());

  const size_t M = scores.size();
  long long total = 1;
  for (size_t m = 0; m < M && total <= beam_limit; ++m)
    total *= static_cast<long long>(sorted_grid.size());

  std::vector<double> best;
  double best_acc = -1.0;
  auto consider = [&](const std::vector<double>& w) {
    bool any = false;
    for (double x : w) any = any || x > 0.0;
    if (!any) return;
    double acc = top1_accuracy(scores, labels, w);
    if (acc > best_acc || (acc == best_acc && (best.empty() || w < best))) {
      best_acc = acc;
      best = w;
    }
  };

  if (total <= beam_limit) {
    // Exhaustive, lexicographic order.
    std::vector<size_t> idx(M, 0);
    std::vector<double> w(M);
    while (true) {
      for (size_t m = 0; m < M; ++m) w[m] = sorted_grid[idx[m]];
      consider(w);
      size_t m = M;
      while (m > 0) {
        --m;
        if (++idx[m] < sorted_grid.size()) break;
        idx[m] = 0;
        if (m == 0) return to_weights(scores, best);
      }
    }
  }

  // Beam fallback: seed with the best single-modality selector, then
  // deterministic coordinate ascent. Single-modality seeds keep the
  // tuned accuracy at or above every individual modality.
  std::vector<double> w(M, 0.0);
  for (size_t m = 0; m < M; ++m) {
    std::vector<double> s(M, 0.0);
    s[m] = 1.0;
    consider(s);
  }
  w = best;
  for (int pass = 0; pass < 8; ++pass) {
    bool changed = false;
    for (size_t m = 0; m < M; ++m) {
      std::vector<double> cand = w;
      for (double g : sorted_grid) {
        cand[m] = g;
        double before = best_acc;
        consider(cand);
        if (best_acc > before) changed = true;
      }
      w = best;
    }
    if (!changed) break;
  }
  return to_weights(scores, best);
}

std::vector<FusionConfigEntry> parse_fusion_config(const std::string& text) {
  std::vector<FusionConfigEntry> entries;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok[0] == '#') continue;
    if (tok != "modality")
      throw std::invalid_argument("fusion config: unrecognized line '" + line + "'");
    FusionConfigEntry e;
    if (!(ls >> e.modality >> e.score_path >> e.alpha))
      throw std::invalid_argument("fusion config: malformed line '" + line + "'");
    if (e.alpha < 0) throw std::invalid_argument("fusion config: negative weight in '" + line + "'");
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw std::invalid_argument("fusion config: no modalities listed");
  return entries;
}

std::vector<FusionConfigEntry> load_fusion_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_fusion_config(ss.str());
}

}  // namespace samslr::ensemble
