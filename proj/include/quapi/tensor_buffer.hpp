// tensor_buffer.hpp: Owning complex buffer with process-wide size accounting
//
// Every path-tensor sized allocation made by the propagators goes through
// TensorBuffer, so the peak number of live tensor bytes can be reported in run
// metadata and asserted on in tests.

#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace quapi {

struct TensorMemoryStats {
    std::size_t current_bytes{0};
    std::size_t peak_bytes{0};
    std::size_t largest_buffer_bytes{0};
};

TensorMemoryStats tensor_memory_stats();
// Resets peak and largest-buffer to the current live size.
void reset_tensor_memory_peak();

class TensorBuffer {
public:
    TensorBuffer() = default;
    explicit TensorBuffer(std::size_t n);
    ~TensorBuffer();

    TensorBuffer(const TensorBuffer& other);
    TensorBuffer& operator=(const TensorBuffer& other);
    TensorBuffer(TensorBuffer&& other) noexcept;
    TensorBuffer& operator=(TensorBuffer&& other) noexcept;

    std::size_t size() const { return size_; }
    std::complex<double>* data() { return data_.get(); }
    const std::complex<double>* data() const { return data_.get(); }
    std::span<std::complex<double>> span() { return {data_.get(), size_}; }
    std::span<const std::complex<double>> span() const { return {data_.get(), size_}; }

    std::complex<double>& operator[](std::size_t i) { return data_[i]; }
    const std::complex<double>& operator[](std::size_t i) const { return data_[i]; }

    void swap(TensorBuffer& other) noexcept;

private:
    void release() noexcept;

    std::unique_ptr<std::complex<double>[]> data_;
    std::size_t size_{0};
};

} // namespace quapi
