"""Correlation power analysis on the AES-128 last round."""

from ._core import (
    attack,
    benchmark,
    encrypt_with_states,
    expand_key,
    generate_dataset,
    inv_sbox,
    invert_key_schedule,
    load_ciphertexts,
    load_traces,
    pearson,
    save_ciphertexts,
    save_traces,
    sbox,
    selection_value,
)

__all__ = [
    "attack",
    "benchmark",
    "encrypt_with_states",
    "expand_key",
    "generate_dataset",
    "inv_sbox",
    "invert_key_schedule",
    "load_ciphertexts",
    "load_traces",
    "pearson",
    "save_ciphertexts",
    "save_traces",
    "sbox",
    "selection_value",
]
