#include "dldmf/tape.hpp"

namespace dldmf {

template struct Tape<double>;
template struct Tape<Dual2>;

}  // namespace dldmf
