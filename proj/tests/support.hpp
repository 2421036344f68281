// SPDX-License-Identifier: Apache-2.0
#ifndef FACETRACK_TESTS_SUPPORT_HPP
#define FACETRACK_TESTS_SUPPORT_HPP

#include <doctest.h>

#include <initializer_list>
#include <string>
#include <vector>

#include "facetrack/error.hpp"
#include "facetrack/gallery.hpp"
#include "facetrack/rng.hpp"
#include "facetrack/types.hpp"

namespace facetrack::test {

// Runs fn and returns the code of the facetrack::Error it throws.
template <typename Fn>
ErrorCode code_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a facetrack::Error");
    return ErrorCode::Io;
}

inline EmbeddingVector unit(std::initializer_list<double> v) {
    const std::vector<double> values(v);
    return l2_normalize(values);
}

inline EmbeddingVector random_unit(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal();
    return l2_normalize(v);
}

inline Detection detection(BoundingBox box, EmbeddingVector e, std::int64_t frame = 0) {
    Detection d;
    d.frame = frame;
    d.box = box;
    d.embedding = std::move(e);
    return d;
}

// Gallery with the given prototype lists; dim taken from the first prototype.
inline Gallery gallery_of(std::vector<std::pair<std::string, std::vector<EmbeddingVector>>> lists) {
    Gallery g;
    g.method = GalleryMethod::Full;
    for (auto& [name, protos] : lists) {
        auto& out = g.entries[name];
        std::int64_t frame = 0;
        for (auto& p : protos) {
            if (g.dim == 0) g.dim = p.dim();
            out.push_back({std::move(p), frame++});
        }
    }
    return g;
}

}  // namespace facetrack::test

#endif  // FACETRACK_TESTS_SUPPORT_HPP
