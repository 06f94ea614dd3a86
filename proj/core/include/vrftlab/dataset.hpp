#pragma once

#include <cstdint>
#include <string>

#include "vrftlab/lti.hpp"

namespace vrftlab {

inline constexpr std::size_t kMinDatasetLength = 10;

struct DatasetMeta {
    std::string scenario;
    std::uint64_t seed = 0;
    // Set once L(z) has been applied; filtering twice is an error.
    bool prefiltered = false;
    bool poisoned = false;
};

// Paired input/output record (U_N, Y_N) of equal length and sample period.
class IoDataset {
public:
    IoDataset(SignalSeries u, SignalSeries y, DatasetMeta meta = {});

    [[nodiscard]] const SignalSeries& u() const noexcept { return u_; }
    [[nodiscard]] const SignalSeries& y() const noexcept { return y_; }
    [[nodiscard]] const DatasetMeta& meta() const noexcept { return meta_; }
    [[nodiscard]] std::size_t size() const noexcept { return u_.size(); }
    [[nodiscard]] double ts() const noexcept { return u_.ts(); }

private:
    SignalSeries u_;
    SignalSeries y_;
    DatasetMeta meta_;
};

}  // namespace vrftlab
