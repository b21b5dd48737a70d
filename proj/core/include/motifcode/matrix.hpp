#ifndef MOTIFCODE_MATRIX_HPP
#define MOTIFCODE_MATRIX_HPP

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <vector>

namespace motif {

// Dense row-major float matrix. Rows index pitch, columns index time
// throughout this library.
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols, float fill = 0.0f)
        : rows_(rows), cols_(cols), v_(static_cast<size_t>(rows) * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return v_.empty(); }
    size_t size() const { return v_.size(); }

    float& at(int r, int c) {
        assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
        return v_[static_cast<size_t>(r) * cols_ + c];
    }
    float at(int r, int c) const {
        assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
        return v_[static_cast<size_t>(r) * cols_ + c];
    }

    const float* row(int r) const { return v_.data() + static_cast<size_t>(r) * cols_; }
    float* row(int r) { return v_.data() + static_cast<size_t>(r) * cols_; }

    std::vector<float>& data() { return v_; }
    const std::vector<float>& data() const { return v_; }

    bool inside(int r, int c) const {
        return r >= 0 && r < rows_ && c >= 0 && c < cols_;
    }

    double sum() const {
        double s = 0.0;
        for (float x : v_) s += x;
        return s;
    }

    int count_positive() const {
        int n = 0;
        for (float x : v_) n += (x > 0.0f);
        return n;
    }

    bool operator==(const Mat& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && v_ == o.v_;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<float> v_;
};

} // namespace motif

#endif
