"""Collisional polygon model of fragment abrasion."""
