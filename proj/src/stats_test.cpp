#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "detective/stats.hpp"

using namespace detective::stats;

TEST_CASE("incomplete beta agrees with boost") {
  const double as[] = {0.5, 1.0, 2.5, 9.0, 40.0};
  const double xs[] = {0.0, 0.01, 0.2, 0.5, 0.77, 0.999, 1.0};
  for (double a : as)
    for (double b : as)
      for (double x : xs) {
        CAPTURE(a);
        CAPTURE(b);
        CAPTURE(x);
        CHECK(incomplete_beta(a, b, x) == doctest::Approx(boost::math::ibeta(a, b, x)).epsilon(1e-10));
      }
}

TEST_CASE("incomplete beta closed forms") {
  CHECK(incomplete_beta(1.0, 1.0, 0.3) == doctest::Approx(0.3));
  CHECK(incomplete_beta(2.0, 1.0, 0.3) == doctest::Approx(0.09));
  CHECK(incomplete_beta(1.0, 3.0, 0.5) == doctest::Approx(1.0 - 0.125));
}

TEST_CASE("student t cdf and quantile agree with boost") {
  for (double df : {1.0, 2.0, 5.0, 18.0, 30.0, 200.0}) {
    boost::math::students_t dist(df);
    for (double t : {-6.0, -2.5, -1.0, 0.0, 0.3, 1.7, 4.0}) {
      CAPTURE(df);
      CAPTURE(t);
      CHECK(student_t_cdf(t, df) == doctest::Approx(boost::math::cdf(dist, t)).epsilon(1e-10));
    }
    for (double p : {0.01, 0.05, 0.5, 0.9, 0.95, 0.999}) {
      CAPTURE(p);
      CHECK(student_t_quantile(p, df) == doctest::Approx(boost::math::quantile(dist, p)).epsilon(1e-9));
    }
  }
}

TEST_CASE("t quantile at 0.95 with 18 df") {
  CHECK(student_t_quantile(0.95, 18.0) == doctest::Approx(1.734064).epsilon(1e-6));
  CHECK(student_t_cdf(0.0, 7.0) == 0.5);
}
