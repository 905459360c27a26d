// tensor_buffer.cpp: TensorBuffer allocation accounting

#include "quapi/tensor_buffer.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <utility>

namespace quapi {

namespace {

std::atomic<std::size_t> g_current{0};
std::atomic<std::size_t> g_peak{0};
std::atomic<std::size_t> g_largest{0};

void update_max(std::atomic<std::size_t>& target, std::size_t value) {
    std::size_t prev = target.load();
    while (value > prev && !target.compare_exchange_weak(prev, value)) {
    }
}

void account_alloc(std::size_t bytes) {
    const std::size_t now = g_current.fetch_add(bytes) + bytes;
    update_max(g_peak, now);
    update_max(g_largest, bytes);
}

void account_free(std::size_t bytes) { g_current.fetch_sub(bytes); }

} // namespace

TensorMemoryStats tensor_memory_stats() { return {g_current.load(), g_peak.load(), g_largest.load()}; }

void reset_tensor_memory_peak() {
    g_peak.store(g_current.load());
    g_largest.store(0);
}

TensorBuffer::TensorBuffer(std::size_t n) : data_(std::make_unique<std::complex<double>[]>(n)), size_(n) {
    account_alloc(n * sizeof(std::complex<double>));
}

TensorBuffer::~TensorBuffer() { release(); }

TensorBuffer::TensorBuffer(const TensorBuffer& other) : TensorBuffer(other.size_) {
    if (size_ > 0) std::memcpy(data_.get(), other.data_.get(), size_ * sizeof(std::complex<double>));
}

TensorBuffer& TensorBuffer::operator=(const TensorBuffer& other) {
    if (this != &other) {
        TensorBuffer copy(other);
        swap(copy);
    }
    return *this;
}

TensorBuffer::TensorBuffer(TensorBuffer&& other) noexcept
    : data_(std::move(other.data_)), size_(std::exchange(other.size_, 0)) {}

TensorBuffer& TensorBuffer::operator=(TensorBuffer&& other) noexcept {
    if (this != &other) {
        release();
        data_ = std::move(other.data_);
        size_ = std::exchange(other.size_, 0);
    }
    return *this;
}

void TensorBuffer::swap(TensorBuffer& other) noexcept {
    std::swap(data_, other.data_);
    std::swap(size_, other.size_);
}

void TensorBuffer::release() noexcept {
    if (data_) account_free(size_ * sizeof(std::complex<double>));
    data_.reset();
    size_ = 0;
}

} // namespace quapi
