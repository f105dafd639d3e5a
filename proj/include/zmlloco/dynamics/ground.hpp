#pragma once

#include <limits>

namespace zmlloco {

// Height-field ground seen by the contact model. Normals are always +z.
class Ground {
 public:
  virtual ~Ground() = default;
  virtual double elevation(double x, double y) const = 0;
  virtual double friction() const = 0;
};

class FlatGround final : public Ground {
 public:
  explicit FlatGround(double height = 0.0, double mu = 1.0)
      : height_(height), mu_(mu) {}
  double elevation(double, double) const override { return height_; }
  double friction() const override { return mu_; }

 private:
  double height_;
  double mu_;
};

// Nothing below: the robot is suspended in free flight.
class NoGround final : public Ground {
 public:
  double elevation(double, double) const override {
    return -std::numeric_limits<double>::infinity();
  }
  double friction() const override { return 0.0; }
};

}  // namespace zmlloco
