"""Paired autoencoders for linear inverse problems."""

from ._pair import (  # noqa: F401
    LatentMap,
    LinearAutoencoder,
    LinearOperator,
    PairModel,
    SvdResult,
    add_noise,
    auroc,
    closed_form_bayes_surrogates,
    fit_empirical_autoencoder,
    fit_empirical_latent_maps,
    gaussian_blur_operator,
    generate_shepp_logan,
    load_idx_images,
    load_linear_pair,
    make_ood_glyphs,
    make_synthetic_digits,
    materialize,
    materialize_surrogates,
    min_norm_right_solve,
    pair_forward_apply,
    pair_inverse_apply,
    pseudo_inverse,
    radon_operator,
    read_pmat,
    relative_error,
    resolve_config,
    run_rank_sweep,
    save_linear_pair,
    sha256_file,
    svd,
    write_pmat,
)

__version__ = "0.1.0"
