#pragma once

#include <complex>
#include <stdexcept>
#include <string>

// Shared vocabulary types for the deformed-kernel library.
//
// Error taxonomy used throughout:
//   std::domain_error   input outside the documented domain of an operation
//   accuracy_error      the requested tolerance cannot be certified
//   geometry_error      a contour / sector placement constraint is violated

namespace rdfk {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846264338327950288;

class accuracy_error : public std::runtime_error {
public:
    explicit accuracy_error(const std::string& what) : std::runtime_error(what) {}
};

class geometry_error : public std::runtime_error {
public:
    explicit geometry_error(const std::string& what) : std::runtime_error(what) {}
};

// Which evaluation route produced a value.
enum class Method { series, closed, laplace, integral };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::series:   return "series";
        case Method::closed:   return "closed";
        case Method::laplace:  return "laplace";
        case Method::integral: return "integral";
    }
    return "?";
}

// A complex value with an absolute-error estimate and provenance tag.
struct ComplexEval {
    cplx   value{0.0, 0.0};
    double err = 0.0;
    Method method = Method::series;
};

}  // namespace rdfk
