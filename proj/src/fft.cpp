#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "unitok/error.h"
#include "unitok/fft.h"

namespace unitok::fft {
namespace {

struct Plan {
    std::vector<int> bitrev;
    std::vector<float> roots_re, roots_im;  // e^{-2*pi*i*k/n}, k < n/2
};

const Plan& plan_for(int n) {
    static std::mutex mu;
    static std::map<int, std::shared_ptr<Plan>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return *it->second;
    auto p = std::make_shared<Plan>();
    p->bitrev.resize(std::size_t(n));
    int logn = 0;
    while ((1 << logn) < n) ++logn;
    for (int i = 0; i < n; ++i) {
        int r = 0;
        for (int b = 0; b < logn; ++b)
            if (i & (1 << b)) r |= 1 << (logn - 1 - b);
        p->bitrev[std::size_t(i)] = r;
    }
    p->roots_re.resize(std::size_t(n / 2));
    p->roots_im.resize(std::size_t(n / 2));
    for (int k = 0; k < n / 2; ++k) {
        const double a = -2.0 * M_PI * k / n;
        p->roots_re[std::size_t(k)] = float(std::cos(a));
        p->roots_im[std::size_t(k)] = float(std::sin(a));
    }
    cache.emplace(n, p);
    return *p;
}

}  // namespace

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void transform(float* data, int n, bool inverse) {
    if (!is_pow2(n)) throw DataError("fft: size must be a power of two");
    if (n == 1) return;
    const Plan& p = plan_for(n);
    for (int i = 0; i < n; ++i) {
        const int j = p.bitrev[std::size_t(i)];
        if (j > i) {
            std::swap(data[2 * i], data[2 * j]);
            std::swap(data[2 * i + 1], data[2 * j + 1]);
        }
    }
    for (int len = 2; len <= n; len <<= 1) {
        const int half = len >> 1;
        const int step = n / len;
        for (int base = 0; base < n; base += len) {
            for (int j = 0; j < half; ++j) {
                const float wr = p.roots_re[std::size_t(j * step)];
                const float wi = inverse ? -p.roots_im[std::size_t(j * step)]
                                         : p.roots_im[std::size_t(j * step)];
                float* a = data + 2 * (base + j);
                float* b = data + 2 * (base + j + half);
                const float tr = b[0] * wr - b[1] * wi;
                const float ti = b[0] * wi + b[1] * wr;
                b[0] = a[0] - tr;
                b[1] = a[1] - ti;
                a[0] += tr;
                a[1] += ti;
            }
        }
    }
}

}  // namespace unitok::fft
