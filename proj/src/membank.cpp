#include "ascl/membank.hpp"

#include <algorithm>
#include <cmath>

namespace ascl {

MemoryBank::MemoryBank(std::size_t capacity, std::size_t dim)
    : capacity_(capacity), dim_(dim), storage_(capacity, dim) {
    require(capacity >= 1, ErrorCode::InvalidArgument, "MemoryBank: capacity must be >= 1");
    require(dim >= 1, ErrorCode::InvalidArgument, "MemoryBank: dim must be >= 1");
}

void MemoryBank::enqueue_batch(const Mat& batch) {
    if (batch.rows == 0) {
        return;
    }
    require(batch.cols == dim_, ErrorCode::InvalidArgument, "enqueue_batch: width mismatch");
    require(batch.rows <= capacity_, ErrorCode::InvalidArgument,
            "enqueue_batch: batch larger than capacity");
    for (std::size_t i = 0; i < batch.rows; ++i) {
        require(std::abs(l2_norm(batch.row(i)) - 1.0) <= 1e-9, ErrorCode::InvalidArgument,
                "enqueue_batch: entry is not unit-norm");
    }
    for (std::size_t i = 0; i < batch.rows; ++i) {
        auto src = batch.row(i);
        std::copy(src.begin(), src.end(), storage_.row(head_).begin());
        head_ = (head_ + 1) % capacity_;
    }
    count_ = std::min(capacity_, count_ + batch.rows);
}

Mat MemoryBank::snapshot() const {
    Mat out(count_, dim_);
    const std::size_t oldest = (head_ + capacity_ - count_) % capacity_;
    for (std::size_t i = 0; i < count_; ++i) {
        auto src = storage_.row((oldest + i) % capacity_);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

MemoryBank MemoryBank::restore(std::size_t capacity, std::size_t dim, const Mat& entries) {
    MemoryBank bank(capacity, dim);
    require(entries.rows <= capacity, ErrorCode::Format, "MemoryBank::restore: too many entries");
    if (entries.rows > 0) {
        require(entries.cols == dim, ErrorCode::Format, "MemoryBank::restore: width mismatch");
        bank.enqueue_batch(entries);
    }
    return bank;
}

}  // namespace ascl
