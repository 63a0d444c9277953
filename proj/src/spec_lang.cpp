#include "genrl/spec_lang.hpp"

#include <cmath>
#include <sstream>

namespace genrl {

std::string_view predicate_keyword(PredicateKind kind) {
  switch (kind) {
    case PredicateKind::ReachBall: return "reach";
    case PredicateKind::InRect: return "inrect";
    case PredicateKind::AvoidRect: return "avoid";
    case PredicateKind::HoldPole: return "holdpole";
    case PredicateKind::ReachTheta: return "reachtheta";
    case PredicateKind::ReachTip: return "reachtip";
  }
  return "?";
}

AtomicPredicate AtomicPredicate::from_params(PredicateKind kind, Vec params, std::string label) {
  auto fail = [&](const std::string& why) {
    throw InvalidInput(std::string(predicate_keyword(kind)) + ": " + why);
  };
  if (!all_finite(params)) fail("non-finite parameter");
  switch (kind) {
    case PredicateKind::ReachBall:
      if (params.size() < 2) fail("expects a center and a radius");
      if (!(params.back() > 0.0)) fail("radius must be positive");
      break;
    case PredicateKind::InRect:
    case PredicateKind::AvoidRect:
      if (params.size() != 4) fail("expects ax, ay, bx, by");
      if (params[0] > params[2] || params[1] > params[3]) fail("corner a must be <= corner b");
      break;
    case PredicateKind::HoldPole:
      if (params.size() != 3) fail("expects goal, tolerance, steps");
      if (!(params[1] > 0.0)) fail("tolerance must be positive");
      if (params[2] < 1.0) fail("hold duration must be at least one step");
      break;
    case PredicateKind::ReachTheta:
      if (params.size() != 2) fail("expects goal, tolerance");
      if (!(params[1] > 0.0)) fail("tolerance must be positive");
      break;
    case PredicateKind::ReachTip:
      if (params.size() != 1) fail("expects a threshold");
      break;
  }
  AtomicPredicate p;
  p.kind = kind;
  p.params = std::move(params);
  p.label = std::move(label);
  return p;
}

AtomicPredicate AtomicPredicate::reach_ball(Vec center, double radius, std::string label) {
  center.push_back(radius);
  return from_params(PredicateKind::ReachBall, std::move(center), std::move(label));
}

AtomicPredicate AtomicPredicate::in_rect(double ax, double ay, double bx, double by,
                                         std::string label) {
  return from_params(PredicateKind::InRect, {ax, ay, bx, by}, std::move(label));
}

AtomicPredicate AtomicPredicate::avoid_rect(double ax, double ay, double bx, double by,
                                            std::string label) {
  return from_params(PredicateKind::AvoidRect, {ax, ay, bx, by}, std::move(label));
}

AtomicPredicate AtomicPredicate::hold_pole(double goal, double tolerance, double steps,
                                           std::string label) {
  return from_params(PredicateKind::HoldPole, {goal, tolerance, steps}, std::move(label));
}

AtomicPredicate AtomicPredicate::reach_theta(double goal, double tolerance, std::string label) {
  return from_params(PredicateKind::ReachTheta, {goal, tolerance}, std::move(label));
}

AtomicPredicate AtomicPredicate::reach_tip(double threshold, std::string label) {
  return from_params(PredicateKind::ReachTip, {threshold}, std::move(label));
}

std::size_t AtomicPredicate::required_state_dim() const {
  switch (kind) {
    case PredicateKind::ReachBall: return params.size() - 1;
    case PredicateKind::InRect:
    case PredicateKind::AvoidRect: return 2;
    case PredicateKind::HoldPole: return 5;
    case PredicateKind::ReachTheta: return 1;
    case PredicateKind::ReachTip: return 2;
  }
  return 0;
}

std::size_t AtomicPredicate::positional_dim() const {
  switch (kind) {
    case PredicateKind::ReachBall: return params.size() - 1;
    case PredicateKind::InRect:
    case PredicateKind::AvoidRect: return 2;
    default: return 1;
  }
}

bool eval_predicate(const AtomicPredicate& p, std::span<const double> s) {
  if (s.size() < p.required_state_dim())
    throw InvalidInput(std::string(predicate_keyword(p.kind)) + " needs a state of dimension " +
                       std::to_string(p.required_state_dim()) + ", got " +
                       std::to_string(s.size()));
  const auto& q = p.params;
  switch (p.kind) {
    case PredicateKind::ReachBall: {
      std::size_t n = q.size() - 1;
      return l2_distance(s.first(n), std::span(q).first(n)) < q[n];
    }
    case PredicateKind::InRect:
      return s[0] >= q[0] && s[0] <= q[2] && s[1] >= q[1] && s[1] <= q[3];
    case PredicateKind::AvoidRect:
      return !(s[0] >= q[0] && s[0] <= q[2] && s[1] >= q[1] && s[1] <= q[3]);
    case PredicateKind::HoldPole:
      return std::abs(s[2] - q[0]) < q[1] && s[4] >= q[2];
    case PredicateKind::ReachTheta:
      return std::abs(s[0] - q[0]) < q[1];
    case PredicateKind::ReachTip:
      return -std::cos(s[0]) - std::cos(s[1] + s[0]) > q[0];
  }
  return false;
}

AtomicPredicate shift_predicate(const AtomicPredicate& p, std::span<const double> delta) {
  if (delta.size() != p.positional_dim())
    throw InvalidInput("shift of " + std::string(predicate_keyword(p.kind)) + " expects " +
                       std::to_string(p.positional_dim()) + " components, got " +
                       std::to_string(delta.size()));
  AtomicPredicate out = p;
  switch (p.kind) {
    case PredicateKind::ReachBall:
      for (std::size_t k = 0; k < delta.size(); ++k) out.params[k] += delta[k];
      break;
    case PredicateKind::InRect:
    case PredicateKind::AvoidRect:
      out.params[0] += delta[0];
      out.params[1] += delta[1];
      out.params[2] += delta[0];
      out.params[3] += delta[1];
      break;
    default:
      out.params[0] += delta[0];
      break;
  }
  return out;
}

AtomicPredicate apply_update(const AtomicPredicate& p, const PredicateUpdate& update,
                             std::size_t times) {
  auto it = update.find(p.label);
  if (p.label.empty() || it == update.end()) return p;
  AtomicPredicate out = p;
  for (std::size_t k = 0; k < times; ++k) out = shift_predicate(out, it->second);
  return out;
}

std::string to_string(const AtomicPredicate& p) {
  std::string out(predicate_keyword(p.kind));
  out += '(';
  for (std::size_t k = 0; k < p.params.size(); ++k) {
    if (k) out += ", ";
    out += format_double(p.params[k]);
  }
  out += ')';
  return out;
}

// ---------------------------------------------------------------------------

Spec Spec::achieve(AtomicPredicate b) {
  Spec s;
  s.kind_ = SpecKind::Achieve;
  s.pred_ = std::move(b);
  return s;
}

Spec Spec::ensuring(Spec body, AtomicPredicate b) {
  Spec s;
  s.kind_ = SpecKind::Ensuring;
  s.pred_ = std::move(b);
  s.lhs_ = std::make_shared<const Spec>(std::move(body));
  return s;
}

Spec Spec::seq(Spec first, Spec second) {
  Spec s;
  s.kind_ = SpecKind::Seq;
  s.lhs_ = std::make_shared<const Spec>(std::move(first));
  s.rhs_ = std::make_shared<const Spec>(std::move(second));
  return s;
}

Spec Spec::choice(Spec left, Spec right) {
  Spec s;
  s.kind_ = SpecKind::Choice;
  s.lhs_ = std::make_shared<const Spec>(std::move(left));
  s.rhs_ = std::make_shared<const Spec>(std::move(right));
  return s;
}

const AtomicPredicate& Spec::predicate() const {
  if (kind_ != SpecKind::Achieve && kind_ != SpecKind::Ensuring)
    throw ConsistencyError("spec node has no predicate");
  return pred_;
}

const Spec& Spec::lhs() const {
  if (!lhs_) throw ConsistencyError("spec node has no left child");
  return *lhs_;
}

const Spec& Spec::rhs() const {
  if (!rhs_) throw ConsistencyError("spec node has no right child");
  return *rhs_;
}

std::size_t Spec::node_count() const {
  return 1 + (lhs_ ? lhs_->node_count() : 0) + (rhs_ ? rhs_->node_count() : 0);
}

std::size_t Spec::depth() const {
  return 1 + std::max(lhs_ ? lhs_->depth() : 0, rhs_ ? rhs_->depth() : 0);
}

bool operator==(const Spec& a, const Spec& b) {
  if (a.kind_ != b.kind_) return false;
  switch (a.kind_) {
    case SpecKind::Achieve: return a.pred_ == b.pred_;
    case SpecKind::Ensuring: return a.pred_ == b.pred_ && *a.lhs_ == *b.lhs_;
    default: return *a.lhs_ == *b.lhs_ && *a.rhs_ == *b.rhs_;
  }
}

std::vector<AtomicPredicate> collect_predicates(const Spec& spec) {
  std::vector<AtomicPredicate> out;
  std::function<void(const Spec&)> walk = [&](const Spec& s) {
    switch (s.kind()) {
      case SpecKind::Achieve: out.push_back(s.predicate()); break;
      case SpecKind::Ensuring:
        out.push_back(s.predicate());
        walk(s.lhs());
        break;
      default:
        walk(s.lhs());
        walk(s.rhs());
    }
  };
  walk(spec);
  return out;
}

Spec map_predicates(const Spec& spec,
                    const std::function<AtomicPredicate(const AtomicPredicate&)>& fn) {
  switch (spec.kind()) {
    case SpecKind::Achieve: return Spec::achieve(fn(spec.predicate()));
    case SpecKind::Ensuring:
      return Spec::ensuring(map_predicates(spec.lhs(), fn), fn(spec.predicate()));
    case SpecKind::Seq:
      return Spec::seq(map_predicates(spec.lhs(), fn), map_predicates(spec.rhs(), fn));
    case SpecKind::Choice:
      return Spec::choice(map_predicates(spec.lhs(), fn), map_predicates(spec.rhs(), fn));
  }
  throw ConsistencyError("unknown spec kind");
}

void Trajectory::validate() const {
  if (states.empty()) throw InvalidInput("trajectory has no states");
  if (actions.size() + 1 != states.size())
    throw InvalidInput("trajectory needs exactly one action fewer than states");
}

Trajectory Trajectory::slice(std::size_t i, std::size_t j) const {
  if (i > j || j >= states.size()) throw InvalidInput("bad trajectory slice");
  Trajectory out;
  out.states.assign(states.begin() + static_cast<std::ptrdiff_t>(i),
                    states.begin() + static_cast<std::ptrdiff_t>(j) + 1);
  if (!actions.empty())
    out.actions.assign(actions.begin() + static_cast<std::ptrdiff_t>(i),
                       actions.begin() + static_cast<std::ptrdiff_t>(j));
  return out;
}

// ---------------------------------------------------------------------------
// Segment evaluation. sat(node, l, r) answers whether states l..r satisfy the
// node; Seq results are memoized per (l, r).

namespace {

class SegmentEvaluator {
 public:
  SegmentEvaluator(const Spec& root, const Trajectory& traj) : n_(traj.states.size()) {
    flatten(root, traj);
  }

  bool sat(std::size_t node, std::size_t l, std::size_t r) {
    const Node& nd = nodes_[node];
    switch (nd.kind) {
      case SpecKind::Achieve:
        return nd.next_true[l] <= r;
      case SpecKind::Ensuring:
        return nd.violations[r + 1] == nd.violations[l] && sat(nd.lhs, l, r);
      case SpecKind::Choice:
        return sat(nd.lhs, l, r) || sat(nd.rhs, l, r);
      case SpecKind::Seq: {
        auto& cell = memo_[nd.memo][l * n_ + r];
        if (cell >= 0) return cell == 1;
        bool ok = false;
        for (std::size_t i = l; i < r && !ok; ++i) ok = sat(nd.lhs, l, i) && sat(nd.rhs, i + 1, r);
        cell = ok ? 1 : 0;
        return ok;
      }
    }
    return false;
  }

 private:
  struct Node {
    SpecKind kind;
    std::size_t lhs = 0, rhs = 0, memo = 0;
    std::vector<std::size_t> next_true;   // Achieve: first satisfying index >= l
    std::vector<std::size_t> violations;  // Ensuring: prefix count of violating states
  };

  std::size_t flatten(const Spec& s, const Trajectory& traj) {
    std::size_t id = nodes_.size();
    nodes_.emplace_back();
    nodes_.back().kind = s.kind();
    switch (s.kind()) {
      case SpecKind::Achieve: {
        std::vector<std::size_t> next(n_ + 1, n_);
        for (std::size_t k = n_; k-- > 0;)
          next[k] = eval_predicate(s.predicate(), traj.states[k]) ? k : next[k + 1];
        nodes_[id].next_true = std::move(next);
        break;
      }
      case SpecKind::Ensuring: {
        std::vector<std::size_t> viol(n_ + 1, 0);
        for (std::size_t k = 0; k < n_; ++k)
          viol[k + 1] = viol[k] + (eval_predicate(s.predicate(), traj.states[k]) ? 0 : 1);
        nodes_[id].violations = std::move(viol);
        std::size_t c = flatten(s.lhs(), traj);
        nodes_[id].lhs = c;
        break;
      }
      default: {
        std::size_t a = flatten(s.lhs(), traj);
        std::size_t b = flatten(s.rhs(), traj);
        nodes_[id].lhs = a;
        nodes_[id].rhs = b;
        if (s.kind() == SpecKind::Seq) {
          nodes_[id].memo = memo_.size();
          memo_.emplace_back(n_ * n_, static_cast<signed char>(-1));
        }
      }
    }
    return id;
  }

  std::size_t n_;
  std::vector<Node> nodes_;
  std::vector<std::vector<signed char>> memo_;
};

}  // namespace

bool eval_spec(const Spec& spec, const Trajectory& traj) {
  if (traj.states.empty()) throw InvalidInput("trajectory has no states");
  SegmentEvaluator ev(spec, traj);
  return ev.sat(0, 0, traj.states.size() - 1);
}

}  // namespace genrl
