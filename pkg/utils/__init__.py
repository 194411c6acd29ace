"""
Утилиты и вспомогательные функции для momentlab.
"""
