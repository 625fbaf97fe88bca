// fft.hpp - batched 1D real transforms along either axis of an nx x np array

#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace wq::detail {

using cplx = std::complex<double>;

struct FftwFree {
    void operator()(void* p) const;
};

template <typename T>
class AlignedBuffer {
public:
    AlignedBuffer() = default;
    explicit AlignedBuffer(std::size_t n);

    T* data() { return ptr_.get(); }
    const T* data() const { return ptr_.get(); }
    std::size_t size() const { return n_; }
    T& operator[](std::size_t k) { return ptr_[k]; }
    const T& operator[](std::size_t k) const { return ptr_[k]; }
    std::span<T> span() { return {ptr_.get(), n_}; }
    std::span<const T> span() const { return {ptr_.get(), n_}; }

private:
    std::unique_ptr<T[], FftwFree> ptr_;
    std::size_t n_{0};
};

using RealBuffer = AlignedBuffer<double>;
using ComplexBuffer = AlignedBuffer<cplx>;

/**
 * Unnormalized r2c / c2r transforms of a row-major real array (p fastest).
 *
 * Along p: real[i*np + j]  <->  half[i*nph + m], nph = np/2 + 1.
 * Along x: real[i*np + j]  <->  half[m*np + j],  m < nx/2 + 1.
 *
 * Plans use FFTW_ESTIMATE so the same input always produces the same bits.
 * c2r transforms clobber their input.
 */
class AxisTransforms {
public:
    AxisTransforms(std::size_t nx, std::size_t np);
    ~AxisTransforms();
    AxisTransforms(const AxisTransforms&) = delete;
    AxisTransforms& operator=(const AxisTransforms&) = delete;

    std::size_t nx() const { return nx_; }
    std::size_t np() const { return np_; }
    std::size_t nph() const { return np_ / 2 + 1; }
    std::size_t nxh() const { return nx_ / 2 + 1; }

    void forward_p(const double* in, cplx* out) const;
    void inverse_p(cplx* in, double* out) const;
    void forward_x(const double* in, cplx* out) const;
    void inverse_x(cplx* in, double* out) const;

private:
    struct Plans;
    std::size_t nx_, np_;
    std::unique_ptr<Plans> plans_;
};

}  // namespace wq::detail
