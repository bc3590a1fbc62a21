#include "storylogic/logic_unit.hpp"

namespace storylogic {

template <typename T>
LogicTracker<T>::LogicTracker(ParamStore<T>& store, const std::string& prefix, int input,
                              int hidden)
    : hidden_(hidden), tracker_(BiGru<T>::create(store, prefix, input, hidden)) {}

template <typename T>
typename LogicTracker<T>::Output LogicTracker<T>::forward(
    ad::Graph<T>& g, const std::array<ad::Var, 4>& logic) const {
  const std::vector<std::uint8_t> mask(4, 1);
  const ad::Var sequence = ad::concat_cols<T>(g, logic);
  Output out;
  out.states = bigru_encode(g, tracker_, sequence, mask).states;
  out.flow = ad::flatten_cols(g, out.states);
  return out;
}

template class LogicTracker<float>;
template class LogicTracker<double>;

}  // namespace storylogic
