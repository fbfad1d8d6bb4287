#include "gradproj/ad/buffer_pool.hpp"

#include <unordered_map>

namespace gradproj::ad::pool {
namespace {

constexpr std::size_t kPage = 4096;

std::size_t size_class(std::size_t bytes) { return (bytes + kPage - 1) / kPage * kPage; }

struct Cache {
    std::unordered_map<std::size_t, std::vector<void*>> idle;
    Stats stats;

    void drop_all() noexcept {
        for (auto& [size, blocks] : idle) {
            for (void* p : blocks) ::operator delete(p, size);
        }
        idle.clear();
        stats.cached_bytes = 0;
    }
    ~Cache() { drop_all(); }
};

Cache& cache() {
    thread_local Cache c;
    return c;
}

}  // namespace

void* allocate(std::size_t bytes) {
    if (bytes < kMinPooledBytes) return ::operator new(bytes);
    const std::size_t cls = size_class(bytes);
    Cache& c = cache();
    const auto it = c.idle.find(cls);
    if (it != c.idle.end() && !it->second.empty()) {
        void* p = it->second.back();
        it->second.pop_back();
        c.stats.cached_bytes -= cls;
        ++c.stats.hits;
        return p;
    }
    ++c.stats.misses;
    return ::operator new(cls);
}

void deallocate(void* p, std::size_t bytes) noexcept {
    if (p == nullptr) return;
    if (bytes < kMinPooledBytes) {
        ::operator delete(p, bytes);
        return;
    }
    const std::size_t cls = size_class(bytes);
    Cache& c = cache();
    if (c.stats.cached_bytes + cls > kMaxCachedBytes) {
        ::operator delete(p, cls);
        return;
    }
    try {
        c.idle[cls].push_back(p);
    } catch (...) {
        ::operator delete(p, cls);
        return;
    }
    c.stats.cached_bytes += cls;
}

Stats stats() { return cache().stats; }

void release_cached() { cache().drop_all(); }

}  // namespace gradproj::ad::pool
