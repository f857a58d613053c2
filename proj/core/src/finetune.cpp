#include "dldmf/finetune.hpp"

#include "dldmf/errors.hpp"
#include "dldmf/svd.hpp"

namespace dldmf {

void factor_decoder(Model& model) {
  auto& layers = model.decoder.layers;
  if (layers.size() < 3)
    throw ConfigError("factor_decoder: decoder depth must be >= 3");
  for (std::size_t l = 1; l + 1 < layers.size(); ++l) {
    const auto* d = std::get_if<DenseLayer>(&layers[l]);
    if (!d) throw ConfigError("factor_decoder: decoder is already factored");
    const auto svd = jacobi_svd(d->out, d->in,
                                model.params.view(d->w, static_cast<std::size_t>(d->in) * d->out));
    FactoredLayer f;
    f.in = d->in;
    f.out = d->out;
    f.r = svd.r;
    f.act = d->act;
    f.b = d->b;
    f.psi = model.params.allocate(svd.u.size(), /*learnable=*/false);
    std::copy(svd.u.begin(), svd.u.end(), model.params.data(f.psi));
    f.alpha = model.params.allocate(svd.sigma.size(), /*learnable=*/true);
    std::copy(svd.sigma.begin(), svd.sigma.end(), model.params.data(f.alpha));
    f.phi_t = model.params.allocate(svd.v.size(), /*learnable=*/false);
    // v is [in][r]; store transposed [r][in]
    for (int j = 0; j < f.r; ++j)
      for (int i = 0; i < f.in; ++i)
        model.params.values[f.phi_t + static_cast<std::uint32_t>(j) * f.in + i] =
            svd.v[static_cast<std::size_t>(i) * f.r + j];
    // retire the dense weights
    model.params.set_trainable(d->w, static_cast<std::size_t>(d->in) * d->out, false);
    layers[l] = f;
  }
}

std::size_t modulated_parameter_count(const Model& model) {
  std::size_t n = 0;
  for (const auto& l : model.decoder.layers)
    if (const auto* f = std::get_if<FactoredLayer>(&l)) n += static_cast<std::size_t>(f->r);
  return n;
}

std::vector<TrainLogRecord> finetune(Model& model, const FinetuneConfig& cfg,
                                     const DomainSpec& domain) {
  if (modulated_parameter_count(model) == 0)
    throw ConfigError("finetune: factor_decoder must run first");
  if (cfg.steps <= 0) throw ConfigError("finetune: steps must be positive");

  model.params.freeze_all();
  for (const auto& l : model.decoder.layers)
    if (const auto* f = std::get_if<FactoredLayer>(&l))
      model.params.set_trainable(f->alpha, static_cast<std::size_t>(f->r), true);
  if (cfg.train_first_last) {
    for (std::size_t l : {std::size_t{0}, model.decoder.layers.size() - 1}) {
      const auto& d = std::get<DenseLayer>(model.decoder.layers[l]);
      model.params.set_trainable(d.w, static_cast<std::size_t>(d.in) * d.out, true);
      model.params.set_trainable(d.b, static_cast<std::size_t>(d.out), true);
    }
  }

  TrainConfig tc;
  tc.w1 = cfg.w1;
  tc.w2 = cfg.w2;
  tc.w3 = cfg.w3;
  tc.adam.lr = cfg.lr;
  tc.steps = cfg.steps;
  tc.mu_batch = 1;
  tc.n_f = cfg.n_f;
  tc.n_u = cfg.n_u;
  tc.n_b = cfg.n_b;
  tc.seed = cfg.seed;
  tc.checkpoint_every = 0;
  tc.probe_every = 0;
  tc.mu_set.lo = {cfg.query.beta, cfg.query.nu, cfg.query.rho};
  tc.mu_set.hi = tc.mu_set.lo;
  tc.mu_set.points = {1, 1, 1};
  tc.mu_set.active = {true, true, true};
  return train(model, tc, domain);
}

}  // namespace dldmf
