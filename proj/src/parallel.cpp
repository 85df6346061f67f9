#include "qstab/parallel.hpp"

namespace qstab {

namespace {
ExecMode g_mode = ExecMode::OpenMP;
}

ExecMode default_exec_mode() { return g_mode; }
void set_default_exec_mode(ExecMode mode) { g_mode = mode; }

} // namespace qstab
