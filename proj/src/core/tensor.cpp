#include "core/tensor.hpp"

namespace ral {

std::atomic<bool>& finite_checks_flag() {
    static std::atomic<bool> flag{false};
    return flag;
}

namespace debug {

static std::string g_fault;

void set_fault(const std::string& name) { g_fault = name; }
const std::string& fault() { return g_fault; }

}  // namespace debug
}  // namespace ral
