"""Slowly drifting Markov chains: perturbation expansions and exact oracles."""
