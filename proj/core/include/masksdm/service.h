// Copyright 2026 The masksdm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MASKSDM_SERVICE_H_
#define MASKSDM_SERVICE_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>

#include "masksdm/checkpoint.h"
#include "masksdm/data.h"

namespace masksdm::service {

// Everything the service reads; never modified after startup.
struct SessionState {
  model::Checkpoint checkpoint;
  data::Dataset dataset;  // standardized with the checkpoint statistics
  data::SplitAssignment split;
};

struct ServiceOptions {
  // Shapley requests whose evaluation count would exceed this get 413.
  std::size_t max_evaluations = 50000;
  std::size_t max_exact_players = 12;
  data::Split eval_split = data::Split::kTest;
  std::string cors_origin = "*";
  std::size_t threads = 1;
};

struct Response {
  int status = 200;
  std::string body;
};

class Service {
 public:
  Service(SessionState state, ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Routes one request without any socket involved; the HTTP server uses the
  // same entry point.
  Response Handle(const std::string& method, const std::string& path,
                  const std::string& body) const;

  // Returns the bound port, or -1 on failure.
  int BindToAnyPort(const std::string& host);
  bool Bind(const std::string& host, int port);
  // Blocks until Stop().
  bool ListenAfterBind();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace masksdm::service

#endif  // MASKSDM_SERVICE_H_
