"""
Модуль тестов для momentlab.
"""
