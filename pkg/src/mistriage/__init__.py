"""Desk-scale misinformation classification pipeline for Dari video metadata.

Modules:
    corpus    -- data model, ingestion, cleaning, stratified splitting
    textnorm  -- deterministic Unicode normalization for Dari/Persian text
    tokenizer -- trainable merge-based subword tokenizer
    encoding  -- pair-input and single-concat sequence encoding
    model     -- numpy transformer encoder classifier with analytic gradients
    train     -- AdamW + warmup/decay training loop with early stopping
    stats     -- metrics, bootstrap CIs, kappa, cross-tabulation, error ranking
    cli       -- reproducible experiment commands
"""

__version__ = "0.1.0"
