#include "btsc/error.hpp"

namespace btsc {

void throw_usage(const std::string& message) { throw Error(ErrorKind::Usage, message); }
void throw_io(const std::string& message) { throw Error(ErrorKind::Io, message); }
void throw_data(const std::string& message) { throw Error(ErrorKind::Data, message); }
void throw_numerical(const std::string& message) { throw Error(ErrorKind::Numerical, message); }

}  // namespace btsc
