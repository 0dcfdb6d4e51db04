#pragma once

#include <gmpxx.h>

#include <string>

#include "tbglab/core.hpp"

namespace tbglab {

// Exact p + q i with p, q rational.
class GaussianRational {
 public:
  GaussianRational() : re_(0), im_(0) {}
  GaussianRational(long v) : re_(v), im_(0) {}
  GaussianRational(mpq_class re, mpq_class im = 0) : re_(std::move(re)), im_(std::move(im)) {
    re_.canonicalize();
    im_.canonicalize();
  }
  static GaussianRational i() { return {mpq_class(0), mpq_class(1)}; }
  static GaussianRational ratio(long num, long den) { return {mpq_class(num, den)}; }

  const mpq_class& re() const { return re_; }
  const mpq_class& im() const { return im_; }
  bool is_zero() const { return sgn(re_) == 0 && sgn(im_) == 0; }
  cplx to_cplx() const { return {re_.get_d(), im_.get_d()}; }
  GaussianRational conj() const { return {re_, -im_}; }
  mpq_class norm() const { return re_ * re_ + im_ * im_; }

  GaussianRational& operator+=(const GaussianRational& o) {
    re_ += o.re_;
    im_ += o.im_;
    return *this;
  }
  GaussianRational& operator-=(const GaussianRational& o) {
    re_ -= o.re_;
    im_ -= o.im_;
    return *this;
  }
  GaussianRational& operator*=(const GaussianRational& o) {
    mpq_class r = re_ * o.re_ - im_ * o.im_;
    mpq_class s = re_ * o.im_ + im_ * o.re_;
    re_ = r;
    im_ = s;
    return *this;
  }
  GaussianRational& operator/=(const GaussianRational& o) {
    mpq_class d = o.norm();
    if (sgn(d) == 0) fail(ErrorKind::Numeric, "GaussianRational: division by zero");
    mpq_class r = (re_ * o.re_ + im_ * o.im_) / d;
    mpq_class s = (im_ * o.re_ - re_ * o.im_) / d;
    re_ = r;
    im_ = s;
    return *this;
  }
  friend GaussianRational operator+(GaussianRational a, const GaussianRational& b) { return a += b; }
  friend GaussianRational operator-(GaussianRational a, const GaussianRational& b) { return a -= b; }
  friend GaussianRational operator*(GaussianRational a, const GaussianRational& b) { return a *= b; }
  friend GaussianRational operator/(GaussianRational a, const GaussianRational& b) { return a /= b; }
  GaussianRational operator-() const { return {-re_, -im_}; }
  friend bool operator==(const GaussianRational& a, const GaussianRational& b) { return a.re_ == b.re_ && a.im_ == b.im_; }

  std::string str() const { return re_.get_str() + (sgn(im_) < 0 ? "" : "+") + im_.get_str() + "i"; }

 private:
  mpq_class re_, im_;
};

}  // namespace tbglab
