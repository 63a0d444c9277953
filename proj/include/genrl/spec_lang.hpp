#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "genrl/common.hpp"

namespace genrl {

enum class PredicateKind { ReachBall, InRect, AvoidRect, HoldPole, ReachTheta, ReachTip };

std::string_view predicate_keyword(PredicateKind kind);

/// A parameterized per-state predicate.
///
/// State layout each kind reads:
///   ReachBall             s[0..n)   against center (n = params.size() - 1)
///   InRect / AvoidRect    s[0], s[1]
///   HoldPole              s[2] (pole angle) and s[4] (hold counter), cart-pole layout
///   ReachTheta            s[0] (pendulum angle)
///   ReachTip              s[0], s[1] (acrobot joint angles)
///
/// Parameter layout:
///   ReachBall             center..., radius
///   InRect / AvoidRect    ax, ay, bx, by
///   HoldPole              goal, tolerance, hold steps
///   ReachTheta            goal, tolerance
///   ReachTip              threshold
///
/// `label` names the predicate (e.g. "g1"). Update functions address
/// predicates by label; equality ignores it.
struct AtomicPredicate {
  PredicateKind kind = PredicateKind::ReachBall;
  Vec params;
  std::string label;

  static AtomicPredicate reach_ball(Vec center, double radius, std::string label = {});
  static AtomicPredicate in_rect(double ax, double ay, double bx, double by, std::string label = {});
  static AtomicPredicate avoid_rect(double ax, double ay, double bx, double by,
                                    std::string label = {});
  static AtomicPredicate hold_pole(double goal, double tolerance, double steps,
                                   std::string label = {});
  static AtomicPredicate reach_theta(double goal, double tolerance, std::string label = {});
  static AtomicPredicate reach_tip(double threshold, std::string label = {});

  /// Builds from a keyword and raw parameters, checking arity and invariants.
  static AtomicPredicate from_params(PredicateKind kind, Vec params, std::string label = {});

  /// Minimum state dimension the predicate reads.
  std::size_t required_state_dim() const;
  /// Number of translatable (positional) parameters.
  std::size_t positional_dim() const;

  friend bool operator==(const AtomicPredicate& a, const AtomicPredicate& b) {
    return a.kind == b.kind && a.params == b.params;
  }
};

bool eval_predicate(const AtomicPredicate& p, std::span<const double> state);

/// Translates the positional parameters (centers, corners, goal angle, tip
/// threshold) by delta; tolerances are untouched.
AtomicPredicate shift_predicate(const AtomicPredicate& p, std::span<const double> delta);

/// label -> translation applied once per induction step.
using PredicateUpdate = std::map<std::string, Vec>;

/// Applies the update `times` times (repeated translation, so composition is exact).
AtomicPredicate apply_update(const AtomicPredicate& p, const PredicateUpdate& update,
                             std::size_t times);

std::string to_string(const AtomicPredicate& p);

// ---------------------------------------------------------------------------

enum class SpecKind { Achieve, Ensuring, Seq, Choice };

/// SPECTRL formula. Immutable value; children are shared.
class Spec {
 public:
  static Spec achieve(AtomicPredicate b);
  static Spec ensuring(Spec body, AtomicPredicate b);
  static Spec seq(Spec first, Spec second);
  static Spec choice(Spec left, Spec right);

  SpecKind kind() const { return kind_; }
  /// Predicate of Achieve / Ensuring nodes.
  const AtomicPredicate& predicate() const;
  /// Body of Ensuring, first of Seq, left of Choice.
  const Spec& lhs() const;
  /// Second of Seq, right of Choice.
  const Spec& rhs() const;

  std::size_t node_count() const;
  std::size_t depth() const;

  friend bool operator==(const Spec& a, const Spec& b);

 private:
  Spec() = default;
  SpecKind kind_ = SpecKind::Achieve;
  AtomicPredicate pred_;
  std::shared_ptr<const Spec> lhs_;
  std::shared_ptr<const Spec> rhs_;
};

/// All predicates in pre-order.
std::vector<AtomicPredicate> collect_predicates(const Spec& spec);

/// Rebuilds the tree with each predicate replaced by fn(predicate).
Spec map_predicates(const Spec& spec,
                    const std::function<AtomicPredicate(const AtomicPredicate&)>& fn);

/// Finite trajectory s_0 -a_0-> ... -a_{t-1}-> s_t.
struct Trajectory {
  std::vector<Vec> states;
  std::vector<Vec> actions;

  std::size_t length() const { return states.empty() ? 0 : states.size() - 1; }
  /// Throws InvalidInput unless states is non-empty and actions is one shorter.
  void validate() const;
  /// States i..j inclusive, with the actions between them.
  Trajectory slice(std::size_t i, std::size_t j) const;
};

bool eval_spec(const Spec& spec, const Trajectory& traj);

// ---------------------------------------------------------------------------
// Surface syntax
//
//   spec   := seq ("ensuring" pred)*
//   seq    := choice (";" choice)*
//   choice := atom ("or" atom)*
//   atom   := "achieve" pred | "(" spec ")"
//   pred   := IDENT "(" arg ("," arg)* ")"
//   arg    := number | IDENT
//
// An IDENT argument is looked up in the region table and expands to its
// numbers; the first such name becomes the predicate label.

using RegionTable = std::map<std::string, Vec, std::less<>>;

Spec parse_spec(std::string_view text, const RegionTable& regions = {});
std::string to_string(const Spec& spec);

}  // namespace genrl
