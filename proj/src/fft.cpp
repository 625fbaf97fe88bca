#include "fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>
#include <stdexcept>
#include <new>

namespace wq::detail {

namespace {
// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

void FftwFree::operator()(void* p) const { fftw_free(p); }

template <typename T>
AlignedBuffer<T>::AlignedBuffer(std::size_t n) : n_(n) {
    void* raw = fftw_malloc(sizeof(T) * (n == 0 ? 1 : n));
    if (raw == nullptr) throw std::bad_alloc();
    ptr_.reset(static_cast<T*>(raw));
    for (std::size_t k = 0; k < n; ++k) ptr_[k] = T{};
}

template class AlignedBuffer<double>;
template class AlignedBuffer<cplx>;

struct AxisTransforms::Plans {
    fftw_plan fwd_p{nullptr};
    fftw_plan inv_p{nullptr};
    fftw_plan fwd_x{nullptr};
    fftw_plan inv_x{nullptr};
};

AxisTransforms::AxisTransforms(std::size_t nx, std::size_t np)
    : nx_(nx), np_(np), plans_(std::make_unique<Plans>()) {
    RealBuffer real(nx * np);
    ComplexBuffer half(std::max(nx * (np / 2 + 1), (nx / 2 + 1) * np));
    auto* c = reinterpret_cast<fftw_complex*>(half.data());
    const int inp = static_cast<int>(np);
    const int inx = static_cast<int>(nx);
    const int nph = inp / 2 + 1;

    std::lock_guard lock(planner_mutex());
    const unsigned flags = FFTW_ESTIMATE;
    plans_->fwd_p = fftw_plan_many_dft_r2c(1, &inp, inx, real.data(), nullptr, 1, inp,
                                           c, nullptr, 1, nph, flags);
    plans_->inv_p = fftw_plan_many_dft_c2r(1, &inp, inx, c, nullptr, 1, nph,
                                           real.data(), nullptr, 1, inp, flags);
    plans_->fwd_x = fftw_plan_many_dft_r2c(1, &inx, inp, real.data(), nullptr, inp, 1,
                                           c, nullptr, inp, 1, flags);
    plans_->inv_x = fftw_plan_many_dft_c2r(1, &inx, inp, c, nullptr, inp, 1,
                                           real.data(), nullptr, inp, 1, flags);
    if (!plans_->fwd_p || !plans_->inv_p || !plans_->fwd_x || !plans_->inv_x) {
        throw std::runtime_error("FFTW planning failed");
    }
}

AxisTransforms::~AxisTransforms() {
    std::lock_guard lock(planner_mutex());
    for (fftw_plan p : {plans_->fwd_p, plans_->inv_p, plans_->fwd_x, plans_->inv_x}) {
        if (p) fftw_destroy_plan(p);
    }
}

void AxisTransforms::forward_p(const double* in, cplx* out) const {
    fftw_execute_dft_r2c(plans_->fwd_p, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

void AxisTransforms::inverse_p(cplx* in, double* out) const {
    fftw_execute_dft_c2r(plans_->inv_p, reinterpret_cast<fftw_complex*>(in), out);
}

void AxisTransforms::forward_x(const double* in, cplx* out) const {
    fftw_execute_dft_r2c(plans_->fwd_x, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

void AxisTransforms::inverse_x(cplx* in, double* out) const {
    fftw_execute_dft_c2r(plans_->inv_x, reinterpret_cast<fftw_complex*>(in), out);
}

}  // namespace wq::detail
