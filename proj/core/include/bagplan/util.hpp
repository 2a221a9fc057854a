#ifndef BAGPLAN_UTIL_HPP
#define BAGPLAN_UTIL_HPP

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace bagplan {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

// Fixed-size bit vector used for ground states and atom universes.
class Bitset {
public:
    Bitset() = default;
    explicit Bitset(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

    std::size_t size() const { return size_; }

    bool test(std::size_t i) const {
        return (words_[i >> 6] >> (i & 63)) & 1;
    }
    void set(std::size_t i) { words_[i >> 6] |= uint64_t{1} << (i & 63); }
    void reset(std::size_t i) { words_[i >> 6] &= ~(uint64_t{1} << (i & 63)); }

    std::size_t count() const {
        std::size_t n = 0;
        for (uint64_t w : words_)
            n += static_cast<std::size_t>(__builtin_popcountll(w));
        return n;
    }

    bool contains_all(const std::vector<int> &atoms) const {
        for (int a : atoms)
            if (!test(static_cast<std::size_t>(a)))
                return false;
        return true;
    }

    bool operator==(const Bitset &other) const = default;
    auto operator<=>(const Bitset &other) const = default;

    uint64_t hash() const {
        uint64_t h = 1469598103934665603ull;
        for (uint64_t w : words_) {
            h ^= w;
            h *= 1099511628211ull;
        }
        return h;
    }

private:
    std::size_t size_ = 0;
    std::vector<uint64_t> words_;
};

inline uint64_t fnv1a64(const void *data, std::size_t len) {
    const auto *p = static_cast<const unsigned char *>(data);
    uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < len; i++) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline uint64_t hash_combine(uint64_t seed, uint64_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ull + (seed << 12) + (seed >> 4));
}

enum class LogLevel { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level();
void log_message(LogLevel level, const std::string &msg);

inline void log_warn(const std::string &msg) { log_message(LogLevel::Warn, msg); }
inline void log_info(const std::string &msg) { log_message(LogLevel::Info, msg); }
inline void log_debug(const std::string &msg) { log_message(LogLevel::Debug, msg); }

} // namespace bagplan

#endif
