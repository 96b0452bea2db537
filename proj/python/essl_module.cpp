// Copyright (c) 2026, The ESSL Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>

#include "essl/container.hpp"
#include "essl/error.hpp"
#include "essl/masking.hpp"
#include "essl/pipeline.hpp"
#include "essl/schedule.hpp"

namespace py = pybind11;

namespace {

using essl::pipeline::ImageBatch;
using essl::pipeline::Loader;
using essl::pipeline::LoaderConfig;

// Wraps a batch's buffers as arrays that keep the batch alive; no copies.
template <typename T>
py::array_t<T> view(const std::shared_ptr<ImageBatch>& owner, std::vector<T>& data, std::vector<py::ssize_t> shape) {
  auto* keep = new std::shared_ptr<ImageBatch>(owner);
  py::capsule base(keep, [](void* p) { delete static_cast<std::shared_ptr<ImageBatch>*>(p); });
  return py::array_t<T>(shape, data.data(), base);
}

py::tuple as_arrays(const std::shared_ptr<ImageBatch>& b) {
  const auto n = static_cast<py::ssize_t>(b->size());
  const py::ssize_t r = b->res;
  return py::make_tuple(view(b, b->pixels, {n, 3, r, r}), view(b, b->labels, {n}),
                        view(b, b->masks, {n, static_cast<py::ssize_t>(b->mask_k)}));
}

class LoaderSession {
 public:
  explicit LoaderSession(const std::string& config_json)
      : loader_(std::make_unique<Loader>(essl::pipeline::parse_loader_config(config_json))) {}

  std::size_t len() const { return loader_->batches_per_epoch(); }
  int epoch() const { return loader_->epoch(); }
  std::size_t position() const { return loader_->batch_index(); }
  std::uint64_t samples() const { return loader_->size(); }
  std::string scheme() const {
    const auto& s = loader_->config().scheme;
    return s ? s->name : std::string();
  }
  std::string config_json() const { return essl::pipeline::to_json(loader_->config()); }

  void set_epoch(int epoch) { loader_->set_epoch(epoch); }

  py::tuple next() {
    auto batch = std::make_shared<ImageBatch>();
    bool more;
    {
      py::gil_scoped_release release;
      more = loader_->next(*batch);
    }
    if (!more) throw py::stop_iteration("end of epoch");
    last_ = batch;
    return as_arrays(batch);
  }

  py::object last_indices() const {
    if (!last_) return py::none();
    return view(last_, last_->indices, {static_cast<py::ssize_t>(last_->size())});
  }

 private:
  std::unique_ptr<Loader> loader_;
  std::shared_ptr<ImageBatch> last_;
};

// Batch `b` of `epoch` from a fresh primary-pipeline loader.
py::tuple reference_batch(const std::string& config_json, int epoch, std::size_t b) {
  auto batch = std::make_shared<ImageBatch>();
  {
    py::gil_scoped_release release;
    Loader loader(essl::pipeline::parse_loader_config(config_json));
    loader.set_epoch(epoch);
    if (b >= loader.batches_per_epoch()) throw essl::RangeError("batch index out of range");
    loader.batch_at(b, *batch);
  }
  return as_arrays(batch);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Packed image dataset loader";

  auto base = py::register_exception<essl::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<essl::ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<essl::RangeError>(m, "RangeError", base.ptr());
  py::register_exception<essl::IoError>(m, "IoError", base.ptr());
  py::register_exception<essl::FormatError>(m, "FormatError", base.ptr());
  py::register_exception<essl::CorruptionError>(m, "CorruptionError", base.ptr());
  py::register_exception<essl::DecodeError>(m, "DecodeError", base.ptr());

  py::class_<LoaderSession>(m, "LoaderSession")
      .def(py::init<const std::string&>(), py::arg("config_json"))
      .def("__len__", &LoaderSession::len)
      .def("__iter__", [](LoaderSession& s) -> LoaderSession& { return s; }, py::return_value_policy::reference)
      .def("__next__", &LoaderSession::next)
      .def("next", &LoaderSession::next,
           "(pixels [B,3,r,r] float32, labels [B] uint32, masks [B,k] int32); raises StopIteration at end of epoch")
      .def("set_epoch", &LoaderSession::set_epoch, py::arg("epoch"))
      .def_property_readonly("epoch", &LoaderSession::epoch)
      .def_property_readonly("position", &LoaderSession::position)
      .def_property_readonly("samples", &LoaderSession::samples)
      .def_property_readonly("scheme", &LoaderSession::scheme)
      .def_property_readonly("config", &LoaderSession::config_json)
      .def_property_readonly("last_indices", &LoaderSession::last_indices);

  m.def("reference_batch", &reference_batch, py::arg("config_json"), py::arg("epoch"), py::arg("batch"));

  m.def(
      "build_container",
      [](const std::string& src, const std::string& out, int max_res, int quality, std::uint64_t seed, int workers) {
        essl::container::BuildSpec spec;
        spec.source = src;
        spec.max_resolution = max_res;
        spec.quality = quality;
        spec.seed = seed;
        spec.workers = workers;
        py::gil_scoped_release release;
        return essl::container::build_container(spec, out).sample_count;
      },
      py::arg("src"), py::arg("out"), py::arg("max_res") = 500, py::arg("quality") = 95, py::arg("seed") = 0,
      py::arg("workers") = 0);

  m.def(
      "masked_count",
      [](int res, int patch, double ratio) {
        const essl::masking::MaskSpec spec{res, patch, ratio};
        spec.validate();
        return spec.masked_count();
      },
      py::arg("res"), py::arg("patch"), py::arg("ratio"));

  m.def("scheme_names", &essl::schedule::builtin_scheme_names);
  m.def(
      "schedule_json",
      [](const std::string& name, int epochs) {
        const auto s = essl::schedule::builtin_scheme(name);
        return essl::schedule::emit_json(s, epochs > 0 ? epochs : s.total_epochs);
      },
      py::arg("name"), py::arg("epochs") = 0);
}
