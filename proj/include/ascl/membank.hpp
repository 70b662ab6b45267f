#pragma once

#include <cstddef>

#include "ascl/numerics.hpp"

namespace ascl {

/// Fixed-capacity FIFO queue of unit-norm momentum-branch projections.
/// Starts empty; once full, each enqueue overwrites the oldest rows.
class MemoryBank {
public:
    static constexpr std::size_t kDefaultCapacity = 4096;

    MemoryBank(std::size_t capacity, std::size_t dim);

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return count_; }
    bool empty() const noexcept { return count_ == 0; }
    bool full() const noexcept { return count_ == capacity_; }

    /// Appends every row of `batch`, evicting oldest-first. Rows must be
    /// unit-norm within 1e-9; the bank never renormalizes.
    void enqueue_batch(const Mat& batch);

    /// Entries oldest-first, as an independent copy.
    Mat snapshot() const;

    /// Rebuilds a bank from entries listed oldest-first.
    static MemoryBank restore(std::size_t capacity, std::size_t dim, const Mat& entries);

private:
    std::size_t capacity_;
    std::size_t dim_;
    std::size_t head_ = 0;  // next slot to write
    std::size_t count_ = 0;
    Mat storage_;
};

}  // namespace ascl
