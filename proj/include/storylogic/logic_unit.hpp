#pragma once

#include "storylogic/error.hpp"
#include "storylogic/esim.hpp"
#include "storylogic/layers.hpp"

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace storylogic {

// (plot sentence i as premise, ending as hypothesis) for i = 1..4.
template <typename Seq>
std::array<std::pair<Seq, Seq>, 4> pair_plot_with_ending(const std::vector<Seq>& plot,
                                                         const Seq& ending) {
  if (plot.size() != 4) {
    throw MismatchError("a plot has exactly 4 sentences, got " + std::to_string(plot.size()));
  }
  std::array<std::pair<Seq, Seq>, 4> pairs;
  for (std::size_t i = 0; i < 4; ++i) pairs[i] = {plot[i], ending};
  return pairs;
}

template <typename Seq>
std::array<std::pair<Seq, Seq>, 4> pair_plot_with_ending(const std::array<Seq, 4>& plot,
                                                         const Seq& ending) {
  return pair_plot_with_ending(std::vector<Seq>(plot.begin(), plot.end()), ending);
}

// BiGRU over the four logic vectors; V_l stacks the per-step states.
template <typename T>
class LogicTracker {
 public:
  LogicTracker(ParamStore<T>& store, const std::string& prefix, int input, int hidden);

  struct Output {
    ad::Var states;  // [2H x 4]
    ad::Var flow;    // [8H x 1] = [h_1; h_2; h_3; h_4]
  };

  Output forward(ad::Graph<T>& g, const std::array<ad::Var, 4>& logic) const;

  int hidden() const { return hidden_; }

 private:
  int hidden_;
  BiGru<T> tracker_;
};

}  // namespace storylogic
