#pragma once

#include "ilpc/loop.hpp"

// One-state plant x+ = 0.9 x + 0.5 u + f + w with K = -0.4, m = 0.2,
// w_bar = r0 = 0.05, |x| <= 2 and |u| <= 1.
inline ilpc::Scenario toy_scenario(int steps) {
  using ilpc::Mat;
  using ilpc::Vec;
  ilpc::Scenario sc;
  sc.name = "toy";
  for (int t = 0; t < steps; ++t) {
    sc.sys.A.push_back(Mat::Constant(1, 1, 0.9));
    sc.sys.B.push_back(Mat::Constant(1, 1, 0.5));
    sc.sys.K.push_back(Mat::Constant(1, 1, -0.4));
    sc.sys.m.push_back(0.2);
    sc.u_bar.push_back(Vec::Constant(1, 0.1));
  }
  sc.sys.w_bar = 0.05;
  sc.sys.r0 = 0.05;
  sc.sys.x_bar = Vec::Constant(1, 0.3);
  sc.cons.Hx = (Mat(2, 1) << 1, 0).finished();
  sc.cons.Hu = (Mat(2, 1) << 0, 1).finished();
  sc.cons.h = (Vec(2) << 2, 1).finished();
  sc.cons.HxT = Mat::Constant(1, 1, 1.0);
  sc.cons.hT = Vec::Constant(1, 2.0);
  sc.dist = ilpc::DisturbanceModel::zero(1);
  sc.reference = ilpc::build_reference(sc.sys, sc.u_bar);
  sc.Q = Mat::Identity(1, 1);
  sc.P = Mat::Constant(1, 1, 0.1);
  sc.c1 = 0.1;
  sc.K0 = Mat::Constant(1, 1, -0.4);
  sc.validate();
  return sc;
}
