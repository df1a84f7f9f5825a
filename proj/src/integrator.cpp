#include "trimer/integrator.hpp"

namespace trimer {

template class Dop853<6>;
template class Dop853<12>;

}  // namespace trimer
