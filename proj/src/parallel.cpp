#include "rml/parallel.hpp"

#include <cstdlib>

namespace rml {

int resolve_workers(int requested)
{
    if (requested > 0) return requested;
    if (const char* env = std::getenv("RML_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : int(hc);
}

}  // namespace rml
