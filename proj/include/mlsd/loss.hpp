/*
 * Copyright 2026 The MLSD Toolkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "mlsd/decode.hpp"
#include "mlsd/maps.hpp"

namespace mlsd {

template <typename Scalar>
struct LossValue {
  Scalar value = Scalar(0);
  std::optional<Plane<Scalar>> gradient;
};

/// Loss weights and thresholds. Defaults are the published training constants.
struct LossWeights {
  double center_pos = 1.0, center_neg = 30.0;
  double junction_pos = 1.0, junction_neg = 30.0;
  double line_pos = 1.0, line_neg = 1.0;
  double gamma = 5.0;        // matching threshold, input pixels
  double smooth_l1_beta = 1.0;
};

namespace detail {

template <typename Scalar>
void require_same_shape(const Plane<Scalar>& a, const Plane<Scalar>& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(what) + ": shape " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
}

// log(1 + exp(x)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar x) {
  return std::max(x, Scalar(0)) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace detail

/// Binary cross-entropy with positive and negative terms normalized separately:
///   l_pos = -sum W(p) log s(F(p)) / sum I(p),   l_neg = -sum (1 - I(p)) log(1 - s(F(p))) / sum (1 - I(p)),
/// value = lambda_pos * l_pos + lambda_neg * l_neg, where I(p) = [W(p) != 0].
/// A term whose normalizer is zero contributes zero.
template <typename Scalar>
LossValue<Scalar> separated_bce(const Plane<Scalar>& logits, const Plane<Scalar>& gt,
                                Scalar lambda_pos, Scalar lambda_neg, bool with_gradient = false) {
  detail::require_same_shape(logits, gt, "separated_bce");
  const Plane<Scalar> positive = (gt != Scalar(0)).template cast<Scalar>();
  const Scalar n_pos = positive.sum();
  const Scalar n_neg = Scalar(positive.size()) - n_pos;

  // -log s(F) = softplus(-F),  -log(1 - s(F)) = softplus(F)
  const Plane<Scalar> nll_pos = (-logits).unaryExpr([](Scalar x) { return detail::softplus(x); });
  const Plane<Scalar> nll_neg = logits.unaryExpr([](Scalar x) { return detail::softplus(x); });

  const Scalar l_pos = n_pos > 0 ? (gt * nll_pos).sum() / n_pos : Scalar(0);
  const Scalar l_neg = n_neg > 0 ? ((Scalar(1) - positive) * nll_neg).sum() / n_neg : Scalar(0);

  LossValue<Scalar> out;
  out.value = lambda_pos * l_pos + lambda_neg * l_neg;
  if (with_gradient) {
    const Plane<Scalar> s = logits.unaryExpr([](Scalar x) { return sigmoid(x); });
    Plane<Scalar> g = Plane<Scalar>::Zero(logits.rows(), logits.cols());
    if (n_pos > 0) g -= (lambda_pos / n_pos) * gt * (Scalar(1) - s);
    if (n_neg > 0) g += (lambda_neg / n_neg) * (Scalar(1) - positive) * s;
    out.gradient = std::move(g);
  }
  return out;
}

template <typename Scalar>
Scalar smooth_l1(Scalar d, Scalar beta = Scalar(1)) {
  const Scalar a = std::abs(d);
  return a < beta ? Scalar(0.5) * a * a / beta : a - Scalar(0.5) * beta;
}

/// Mean smooth-L1 of (pred - gt) over the cells where mask != 0; zero for an empty mask.
template <typename Scalar>
LossValue<Scalar> masked_smooth_l1(const Plane<Scalar>& pred, const Plane<Scalar>& gt,
                                   const Plane<Scalar>& mask, bool with_gradient = false,
                                   Scalar beta = Scalar(1)) {
  detail::require_same_shape(pred, gt, "masked_smooth_l1");
  detail::require_same_shape(pred, mask, "masked_smooth_l1 mask");
  const Plane<Scalar> on = (mask != Scalar(0)).template cast<Scalar>();
  const Scalar n = on.sum();
  const Plane<Scalar> diff = pred - gt;

  LossValue<Scalar> out;
  if (n > 0)
    out.value = (on * diff.unaryExpr([beta](Scalar d) { return smooth_l1(d, beta); })).sum() / n;
  if (with_gradient) {
    Plane<Scalar> g = Plane<Scalar>::Zero(pred.rows(), pred.cols());
    if (n > 0)
      g = on * diff.unaryExpr([beta](Scalar d) {
            return std::abs(d) < beta ? d / beta : (d > 0 ? Scalar(1) : Scalar(-1));
          }) / n;
    out.gradient = std::move(g);
  }
  return out;
}

template <typename Scalar>
struct MatchPair {
  std::size_t pred_index;
  std::size_t gt_index;
  LineSegment<Scalar> pred;
  LineSegment<Scalar> gt;
  Point<Scalar> pred_center;  // input coordinates of the center cell that generated `pred`
};

template <typename Scalar>
struct MatchSet {
  std::vector<MatchPair<Scalar>> pairs;
  Scalar gamma = Scalar(5);
};

/// Pairs predictions with GT lines whose start and end points are both strictly closer
/// than gamma (input pixels, after canonicalization). Assignment is greedy one-to-one by
/// ascending summed endpoint distance; ties go to the lower pred index, then GT index.
template <typename Scalar>
MatchSet<Scalar> match_lines(std::span<const DecodedLine<Scalar>> preds,
                             std::span<const LineSegment<Scalar>> gts, Scalar gamma) {
  struct Candidate {
    Scalar distance;
    std::size_t pred, gt;
  };
  std::vector<LineSegment<Scalar>> pred_lines, gt_lines;
  for (const auto& p : preds) pred_lines.push_back(canonicalize(p.line));
  for (const auto& g : gts) gt_lines.push_back(canonicalize(g));

  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < pred_lines.size(); ++i)
    for (std::size_t j = 0; j < gt_lines.size(); ++j) {
      const Scalar ds = (gt_lines[j].start - pred_lines[i].start).norm();
      const Scalar de = (gt_lines[j].end - pred_lines[i].end).norm();
      if (ds < gamma && de < gamma) candidates.push_back({ds + de, i, j});
    }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    return std::tie(a.distance, a.pred, a.gt) < std::tie(b.distance, b.pred, b.gt);
  });

  MatchSet<Scalar> matches;
  matches.gamma = gamma;
  std::vector<bool> pred_used(pred_lines.size()), gt_used(gt_lines.size());
  for (const auto& c : candidates) {
    if (pred_used[c.pred] || gt_used[c.gt]) continue;
    pred_used[c.pred] = gt_used[c.gt] = true;
    matches.pairs.push_back(
        {c.pred, c.gt, pred_lines[c.pred], gt_lines[c.gt], preds[c.pred].center});
  }
  return matches;
}

/// Mean over matched pairs of |l_s - l^_s|_1 + |l_e - l^_e|_1 + |C(l^) - (l_s + l_e)/2|_1,
/// where C(l^) is the center the prediction was generated from. Zero for no matches.
/// No gradient: the matches come from a non-differentiable extraction step.
template <typename Scalar>
LossValue<Scalar> matching_loss(const MatchSet<Scalar>& matches) {
  LossValue<Scalar> out;
  if (matches.pairs.empty()) return out;
  Scalar sum = 0;
  for (const auto& m : matches.pairs) {
    sum += (m.gt.start - m.pred.start).template lpNorm<1>();
    sum += (m.gt.end - m.pred.end).template lpNorm<1>();
    sum += (m.pred_center - m.gt.center()).template lpNorm<1>();
  }
  out.value = sum / Scalar(matches.pairs.size());
  return out;
}

template <typename Scalar>
struct StackLoss {
  Scalar center = 0, displacement = 0, length = 0, degree = 0, matching = 0;
  std::optional<MapStack<Scalar>> gradient;

  Scalar value() const { return center + displacement + length + degree + matching; }
};

/// Loss of one line-representation stack (TP or SoL):
/// center + displacement + length + degree + matching.
/// `pred` holds center logits and raw regression channels; `decoded` are the lines generated
/// from the predicted TP maps and `gt_lines` the lines the GT stack was encoded from.
template <typename Scalar>
StackLoss<Scalar> stack_loss(const MapStack<Scalar>& pred, const MapStack<Scalar>& gt,
                             const Plane<Scalar>& mask,
                             std::span<const DecodedLine<Scalar>> decoded,
                             std::span<const LineSegment<Scalar>> gt_lines,
                             const LossWeights& w = {}, bool with_gradient = false) {
  if (!pred.same_shape(gt)) throw ShapeError("prediction and GT stacks differ in shape");
  const Scalar beta = static_cast<Scalar>(w.smooth_l1_beta);

  StackLoss<Scalar> out;
  if (with_gradient) out.gradient = MapStack<Scalar>(pred.rows(), pred.cols());

  auto center = separated_bce(pred.center(), gt.center(), Scalar(w.center_pos),
                              Scalar(w.center_neg), with_gradient);
  out.center = center.value;
  if (with_gradient) out.gradient->center() = std::move(*center.gradient);

  for (Channel ch : {Channel::kStartX, Channel::kStartY, Channel::kEndX, Channel::kEndY}) {
    auto term = masked_smooth_l1(pred[ch], gt[ch], mask, with_gradient, beta);
    out.displacement += term.value;
    if (with_gradient) (*out.gradient)[ch] = std::move(*term.gradient);
  }

  auto length = masked_smooth_l1(pred.length(), gt.length(), mask, with_gradient, beta);
  out.length = length.value;
  if (with_gradient) out.gradient->length() = std::move(*length.gradient);

  auto degree = masked_smooth_l1(pred.degree(), gt.degree(), mask, with_gradient, beta);
  out.degree = degree.value;
  if (with_gradient) out.gradient->degree() = std::move(*degree.gradient);

  out.matching = matching_loss(match_lines(decoded, gt_lines, Scalar(w.gamma))).value;
  return out;
}

/// Loss on the TP maps against the original annotation.
template <typename Scalar>
StackLoss<Scalar> tp_loss(const MapStack<Scalar>& pred, const GtBundle<Scalar>& gt,
                          std::span<const DecodedLine<Scalar>> decoded,
                          const LossWeights& w = {}, bool with_gradient = false) {
  return stack_loss(pred, gt.tp, gt.tp_mask, decoded,
                    std::span<const LineSegment<Scalar>>(gt.tp_lines), w, with_gradient);
}

/// Same formula on the SoL maps against the subpart GT. `decoded` are lines generated from
/// the SoL maps.
template <typename Scalar>
StackLoss<Scalar> sol_loss(const MapStack<Scalar>& pred, const GtBundle<Scalar>& gt,
                           std::span<const DecodedLine<Scalar>> decoded,
                           const LossWeights& w = {}, bool with_gradient = false) {
  return stack_loss(pred, gt.sol, gt.sol_mask, decoded,
                    std::span<const LineSegment<Scalar>>(gt.sol_lines), w, with_gradient);
}

/// Network output for one image: two line-representation stacks and the segmentation logits.
template <typename Scalar>
struct PredBundle {
  MapStack<Scalar> tp;
  MapStack<Scalar> sol;
  Plane<Scalar> junction;
  Plane<Scalar> line;
};

template <typename Scalar>
struct TotalLoss {
  StackLoss<Scalar> tp;
  StackLoss<Scalar> sol;
  Scalar junction = 0;
  Scalar line = 0;
  std::optional<Plane<Scalar>> junction_gradient;
  std::optional<Plane<Scalar>> line_gradient;

  Scalar segmentation() const { return junction + line; }
  Scalar value() const { return tp.value() + sol.value() + junction + line; }
};

/// L_TP + L_SoL + L_junc + L_line. Each stack is matched against lines decoded from itself.
template <typename Scalar>
TotalLoss<Scalar> total_loss(const PredBundle<Scalar>& pred, const GtBundle<Scalar>& gt,
                             std::span<const DecodedLine<Scalar>> tp_decoded,
                             std::span<const DecodedLine<Scalar>> sol_decoded,
                             const LossWeights& w = {}, bool with_gradient = false) {
  TotalLoss<Scalar> out;
  out.tp = tp_loss(pred.tp, gt, tp_decoded, w, with_gradient);
  out.sol = sol_loss(pred.sol, gt, sol_decoded, w, with_gradient);
  auto junc = separated_bce(pred.junction, gt.seg.junction, Scalar(w.junction_pos),
                            Scalar(w.junction_neg), with_gradient);
  auto line = separated_bce(pred.line, gt.seg.line, Scalar(w.line_pos), Scalar(w.line_neg),
                            with_gradient);
  out.junction = junc.value;
  out.line = line.value;
  out.junction_gradient = std::move(junc.gradient);
  out.line_gradient = std::move(line.gradient);
  return out;
}

}  // namespace mlsd
