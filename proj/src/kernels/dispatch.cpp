#include <cstdlib>
#include <string>

#include "fde/common.hpp"
#include "fde/kernels.hpp"

namespace fde::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(FDE_HAVE_AVX2)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Table* table_for(Backend b) {
    switch (b) {
        case Backend::scalar:
            return &detail::scalar_table();
        case Backend::avx2:
#if defined(FDE_HAVE_AVX2)
            return &detail::avx2_table();
#else
            return nullptr;
#endif
    }
    return nullptr;
}

struct State {
    Backend backend;
    const Table* table;
};

State initial_state() {
    Backend b = cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
    if (const char* env = std::getenv("FDE_KERNELS")) {
        std::string want(env);
        if (want == "scalar") {
            b = Backend::scalar;
        } else if (want == "avx2" && backend_available(Backend::avx2)) {
            b = Backend::avx2;
        }
    }
    return {b, table_for(b)};
}

State& state() {
    static State s = initial_state();
    return s;
}

}  // namespace

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
    }
    return "unknown";
}

bool backend_available(Backend b) {
    if (b == Backend::scalar) return true;
    return cpu_has_avx2();
}

Backend active_backend() { return state().backend; }

void set_backend(Backend b) {
    if (!backend_available(b)) {
        throw ConfigError(std::string("kernel backend unavailable: ") + backend_name(b));
    }
    state() = {b, table_for(b)};
}

const Table& table() { return *state().table; }

}  // namespace fde::kernels
